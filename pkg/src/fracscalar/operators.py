"""Nonlocal operators on the torus in Fourier-multiplier form.

Each operator is available twice: as a symbol builder ``*_symbol(k1, k2, ...)``
returning the multiplier on a wavenumber array, and as a function acting on
a real field.  The kernel (singular-integral) versions live in
:mod:`fracscalar.kernels` and serve as an independent check of these.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import MeanNotZero
from .grid import apply_symbol_real, grid_of

log = logging.getLogger(__name__)


def _kabs(k1, k2):
    return np.hypot(k1, k2)


def lambda_symbol(k1, k2, s):
    """``|k|^s`` with ``|0|^s = 0`` for ``s > 0``; zero at ``k = 0`` for ``s < 0``."""
    kk = _kabs(k1, k2)
    if s == 0:
        return np.ones_like(kk)
    with np.errstate(divide="ignore"):
        out = kk**s
    return np.where(kk == 0, 0.0, out)


def riesz_symbol(k1, k2, j, n=None):
    """``-i k_j/|k|``; zero at ``k = 0`` and on the unpaired Nyquist modes of axis ``j``."""
    if j not in (1, 2):
        raise ValueError(f"Riesz index must be 1 or 2, got {j!r}")
    kj = k1 if j == 1 else k2
    kk = _kabs(k1, k2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(kk == 0, 0.0, -1j * kj / kk)
    if n is not None:
        out = np.where(np.abs(kj) == n // 2, 0.0, out)
    return out


def derivative_symbol(k1, k2, j, n=None):
    kj = k1 if j == 1 else k2
    out = 1j * kj
    if n is not None:
        out = np.where(np.abs(kj) == n // 2, 0.0, out)
    return out


def resolvent_symbol(k1, k2, beta):
    """``1/(1 + |k|^beta)``."""
    return 1.0 / (1.0 + lambda_symbol(k1, k2, beta))


def inv_laplacian_symbol(k1, k2):
    """``-1/|k|^2`` off zero, ``0`` at ``k = 0`` (mean removed)."""
    kk2 = k1 * k1 + k2 * k2
    with np.errstate(divide="ignore"):
        return np.where(kk2 == 0, 0.0, -1.0 / kk2)


def heat_symbol(k1, k2, eps):
    return np.exp(-eps * (k1 * k1 + k2 * k2))


def lambda_pow(u: np.ndarray, s: float, *, subtract_mean: bool = False) -> np.ndarray:
    """Fractional Laplacian ``Lambda^s u = (-Delta)^{s/2} u``.

    For ``s < 0`` the operator is only defined on mean-zero fields.  A field
    with ``|mean| > 1e-10 * max|u|`` raises :class:`MeanNotZero` unless
    ``subtract_mean`` is set, in which case the mean is dropped with a warning.
    """
    u = np.asarray(u, dtype=float)
    if s < 0:
        m = float(np.mean(u))
        if abs(m) > 1e-10 * max(float(np.max(np.abs(u))), 1e-300):
            if not subtract_mean:
                raise MeanNotZero(f"Lambda^{s} needs a mean-zero field, mean = {m:.3e}")
            log.warning("Lambda^%s: subtracting nonzero mean %.3e", s, m)
    return apply_symbol_real(u, lambda k1, k2: lambda_symbol(k1, k2, s))


def riesz(u: np.ndarray, j: int) -> np.ndarray:
    """Riesz transform ``R_j`` with symbol ``-i k_j/|k|``."""
    n = grid_of(u).n
    return apply_symbol_real(u, lambda k1, k2: riesz_symbol(k1, k2, j, n))


def partial(u: np.ndarray, j: int) -> np.ndarray:
    n = grid_of(u).n
    return apply_symbol_real(u, lambda k1, k2: derivative_symbol(k1, k2, j, n))


def gradient(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return partial(u, 1), partial(u, 2)


def divergence(b1: np.ndarray, b2: np.ndarray) -> np.ndarray:
    return partial(b1, 1) + partial(b2, 2)


def laplacian(u: np.ndarray) -> np.ndarray:
    return apply_symbol_real(u, lambda k1, k2: -(k1 * k1 + k2 * k2))


def inv_one_plus_lambda_beta(u: np.ndarray, beta: float) -> np.ndarray:
    """Resolvent ``(1 + Lambda^beta)^{-1} u``; constants pass through unchanged."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    return apply_symbol_real(u, lambda k1, k2: resolvent_symbol(k1, k2, beta))


def inv_laplacian_meanzero(u: np.ndarray) -> np.ndarray:
    """``Delta^{-1}(u - <u>)``; the result has zero mean."""
    return apply_symbol_real(u, inv_laplacian_symbol)


def heat_mollify(u: np.ndarray, eps: float) -> np.ndarray:
    """Convolution with the periodic heat kernel at time ``eps``."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps!r}")
    if eps == 0:
        return np.array(u, dtype=float, copy=True)
    return apply_symbol_real(u, lambda k1, k2: heat_symbol(k1, k2, eps))


def hs_seminorm(u: np.ndarray, s: float) -> float:
    """``||Lambda^s u||_{L^2}`` evaluated on the Fourier side."""
    g = grid_of(u)
    k1, k2 = g.full_k
    coeffs = g.h**2 * np.fft.fft2(u)
    weight = lambda_symbol(k1, k2, s) ** 2
    return float(np.sqrt(np.sum(weight * np.abs(coeffs) ** 2) / (4 * np.pi**2)))
