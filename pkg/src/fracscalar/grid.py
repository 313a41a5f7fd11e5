"""Uniform grid on the torus [-pi, pi)^2 and the spectral substrate.

Fields are plain ``(n, n)`` float arrays indexed ``[i, j]`` with
``x1 = -pi + i*h`` and ``x2 = -pi + j*h``.  Spectral coefficients use the
Riemann-sum normalization

    u_hat(k) = sum_x u(x) exp(-i k.x) h^2,

so ``u_hat(0)`` is the integral of ``u`` over the torus.  Inside hot loops
the package works with raw ``rfft2`` arrays instead; every operator there is
a diagonal multiplier, so the phase and scale conventions cancel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Union

import numpy as np
import scipy.fft

from .errors import SymmetryViolation

AREA = 4.0 * np.pi**2

Symbol = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def fft_workers() -> int:
    """Worker count for FFTs, capped by ``FRACSCALAR_THREADS``."""
    try:
        return max(1, int(os.environ.get("FRACSCALAR_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TorusGrid:
    """An ``n x n`` uniform grid on the 2*pi-periodic square.

    Wavenumber arrays come in two layouts: ``K1, K2`` for full ``fft2``
    coefficients and ``rk1, rk2`` for the half-spectrum of ``rfft2``.
    """

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n!r}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -np.pi + np.arange(self.n) * self.h

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in fft order, covering [-n/2, n/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def full_k(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.k, self.k, indexing="ij"))

    @cached_property
    def half_k(self) -> tuple[np.ndarray, np.ndarray]:
        k2 = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        return tuple(np.meshgrid(self.k, k2, indexing="ij"))

    @cached_property
    def phase(self) -> np.ndarray:
        # exp(-i k.x_0) with x_0 = (-pi, -pi)
        k1, k2 = self.full_k
        return np.where((k1 + k2) % 2 == 0, 1.0, -1.0)

    def dealias_mask(self, layout: str = "half") -> np.ndarray:
        """True on retained modes, i.e. ``max(|k1|, |k2|) < n/3``."""
        k1, k2 = self.half_k if layout == "half" else self.full_k
        return np.maximum(np.abs(k1), np.abs(k2)) < self.n / 3.0

    def nyquist(self, axis: int, layout: str = "half") -> np.ndarray:
        """Mask of the unpaired ``|k_axis| = n/2`` modes."""
        kk = (self.half_k if layout == "half" else self.full_k)[axis]
        return np.abs(kk) == self.n // 2

    def rfft(self, u: np.ndarray) -> np.ndarray:
        return scipy.fft.rfft2(u, workers=fft_workers())

    def irfft(self, uh: np.ndarray) -> np.ndarray:
        return scipy.fft.irfft2(uh, s=(self.n, self.n), workers=fft_workers())


@lru_cache(maxsize=16)
def get_grid(n: int) -> TorusGrid:
    return TorusGrid(int(n))


def grid_of(u: np.ndarray) -> TorusGrid:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square 2D field, got shape {u.shape}")
    return get_grid(u.shape[0])


@dataclass(frozen=True)
class SpectralField:
    """Full ``n x n`` Fourier coefficients of a real field (fft order)."""

    grid: TorusGrid
    coeffs: np.ndarray

    def conjugate_defect(self) -> float:
        c = self.coeffs
        flipped = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        return float(np.max(np.abs(c - np.conj(flipped)), initial=0.0))


def _eval_symbol(m: Symbol, k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    if callable(m):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = m(k1, k2)
        return np.broadcast_to(np.asarray(out, dtype=complex), k1.shape)
    return np.broadcast_to(np.asarray(m, dtype=complex), k1.shape)


def forward_transform(f: np.ndarray) -> SpectralField:
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")
    grid = grid_of(f)
    coeffs = grid.h**2 * grid.phase * np.fft.fft2(f)
    return SpectralField(grid, coeffs)


def inverse_transform(F: SpectralField, tol: float = 1e-10) -> np.ndarray:
    """Back to grid values; raises :class:`SymmetryViolation` for non-real data."""
    scale = max(1.0, float(np.max(np.abs(F.coeffs), initial=0.0)))
    defect = F.conjugate_defect()
    if defect > tol * scale:
        raise SymmetryViolation(f"conjugate symmetry broken by {defect:.3e}")
    g = F.grid
    f = np.fft.ifft2(F.coeffs * g.phase) / g.h**2
    resid = float(np.max(np.abs(f.imag), initial=0.0))
    if resid > 1e-12 * max(1.0, float(np.max(np.abs(f.real), initial=0.0))):
        raise SymmetryViolation(f"imaginary residue {resid:.3e} after inversion")
    return f.real.copy()


def check_symbol_symmetry(m: Symbol, grid: TorusGrid, tol: float = 1e-12) -> None:
    """Require ``m(-k) == conj(m(k))`` on the full wavenumber lattice."""
    k1, k2 = grid.full_k
    vals = _eval_symbol(m, k1, k2)
    partner = np.roll(np.flip(vals, axis=(0, 1)), 1, axis=(0, 1))
    defect = np.abs(partner - np.conj(vals))
    scale = np.maximum(1.0, np.abs(vals))
    bad = np.isfinite(vals) & (defect > tol * scale)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise SymmetryViolation(
            f"multiplier breaks conjugate symmetry at k=({k1[i, j]:.0f}, {k2[i, j]:.0f})"
        )


def apply_multiplier(F: SpectralField, m: Symbol) -> SpectralField:
    """Pointwise product ``m(k) * F(k)``; ``m`` is an array or ``m(k1, k2)``."""
    check_symbol_symmetry(m, F.grid)
    k1, k2 = F.grid.full_k
    return SpectralField(F.grid, F.coeffs * _eval_symbol(m, k1, k2))


def integrate(f: np.ndarray) -> float:
    """Uniform-grid quadrature of ``f`` over the torus (spectrally accurate)."""
    f = np.asarray(f)
    h = 2.0 * np.pi / f.shape[-1]
    return float(np.sum(f) * h * h)


def mean(f: np.ndarray) -> float:
    """Spatial mean ``(1/4pi^2) * integral``."""
    return float(np.mean(f))


def dealias(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, np.where(F.grid.dealias_mask("full"), F.coeffs, 0.0))


def apply_symbol_real(u: np.ndarray, m: Symbol) -> np.ndarray:
    """Apply a (conjugate-symmetric) multiplier to a real field via ``rfft2``."""
    g = grid_of(u)
    k1, k2 = g.half_k
    return g.irfft(g.rfft(u) * _eval_symbol(m, k1, k2))
