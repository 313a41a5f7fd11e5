"""Singular-integral (kernel) forms of Lambda^alpha and R_j on the torus.

These evaluate the periodized kernel representations directly on the grid
and are deliberately independent of the FFT path in
:mod:`fracscalar.operators`: they serve as its correctness oracle.  Cost is
O(n^2 K^2) to fold the image-cell weights plus O(n^4) for the discrete
convolution, so grids are limited to ``n <= 64``.

Discretization
--------------
The image sum over cells ``|k|_inf <= K`` equals one integral over the
square ``[-L, L]^2`` with ``L = (2K+1) pi``.  It is sampled at the grid
offsets ``eta = m h`` (midpoint rule, half weights on the box edge) and the
weights are folded back onto the ``n x n`` periodic offsets.  The symmetric
box makes the ``eta / -eta`` pairing exact.

* Singular cell: for ``Lambda^alpha`` the cell around ``eta = 0`` is replaced
  by its second-order Taylor value ``-(1/4) Delta u(x) * int_cell |eta|^-alpha``.
  For ``R_j`` the odd kernel times the linear Taylor term is even, so the
  cell contributes ``-d_j u(x) * (1/2) int_cell |y|^-1``, not zero.
  ``singular="lattice"`` extends the same Taylor correction to the midpoint
  error of every cell, which is markedly more accurate on coarse grids.
* Far field: outside the box ``u(x - eta)`` is closed by its mean, which
  adds ``(u(x) - <u>) * int_{|eta|_inf > L} |eta|^{-2-alpha}`` for
  ``Lambda^alpha``; the odd Riesz kernel gets no closure.  The size of this
  far-field term is reported as the tail-error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from .errors import GridTooLarge, TruncationTooSmall
from .grid import grid_of

MAX_QUADRATURE_N = 64
TAIL_BUDGET = 0.10


@dataclass(frozen=True)
class KernelTruncation:
    """Lattice truncation of the periodized kernel sums.

    ``lattice_radius`` is K, the largest ``|k|_inf`` of image cells kept.
    ``singular`` selects the singular-cell rule (``"cell"`` or ``"lattice"``).
    """

    lattice_radius: int = 20
    pv_pairing: bool = True
    singular: str = "cell"

    def __post_init__(self):
        if int(self.lattice_radius) < 1:
            raise ValueError(f"lattice_radius must be >= 1, got {self.lattice_radius!r}")
        if self.singular not in ("cell", "lattice"):
            raise ValueError(f"singular must be 'cell' or 'lattice', got {self.singular!r}")


@dataclass(frozen=True)
class OperatorConstants:
    """Kernel constants for d = 2.

    ``r_d`` is ``Gamma(1 + d/2) / pi^((d+1)/2)`` as written in the source
    kernel formula.  The kernel ``y_j/|y|^3`` has symbol ``-i k_j/|k|`` only
    with ``Gamma((d+1)/2) / pi^((d+1)/2)``, stored as ``riesz_kernel``; the
    quadrature uses the latter.
    """

    alpha: float
    c_alpha_d: float
    r_d: float
    riesz_kernel: float


def fractional_constant(alpha: float, d: int = 2) -> float:
    """``2^a Gamma((d+a)/2) / (pi^(d/2) |Gamma(-a/2)|)``."""
    return float(2.0**alpha * gamma((d + alpha) / 2.0) / (np.pi ** (d / 2.0) * abs(gamma(-alpha / 2.0))))


def operator_constants(alpha: float, d: int = 2) -> OperatorConstants:
    return OperatorConstants(
        alpha=alpha,
        c_alpha_d=fractional_constant(alpha, d),
        r_d=float(gamma(1.0 + d / 2.0) / np.pi ** ((d + 1) / 2.0)),
        riesz_kernel=float(gamma((d + 1) / 2.0) / np.pi ** ((d + 1) / 2.0)),
    )


@dataclass(frozen=True)
class QuadratureResult:
    values: np.ndarray
    tail_estimate: float
    constant: float


def _octant(f) -> float:
    return 8.0 * quad(f, 0.0, np.pi / 4.0, epsabs=1e-14, epsrel=1e-13)[0]


def cell_integral(h: float, a: float) -> float:
    """``int_{[-h/2, h/2]^2} |eta|^-a`` for ``a < 2``."""
    return h ** (2.0 - a) / (2.0 - a) * _octant(lambda t: (2.0 * np.cos(t)) ** (a - 2.0))


def box_integral(L: float, a: float) -> float:
    """``int_{[-L, L]^2} |eta|^-a`` for ``a < 2``."""
    return L ** (2.0 - a) / (2.0 - a) * _octant(lambda t: np.cos(t) ** (a - 2.0))


def exterior_integral(L: float, a: float) -> float:
    """``int_{|eta|_inf > L} |eta|^(-2-a)`` for ``a > 0``."""
    return L ** (-a) / a * _octant(lambda t: np.cos(t) ** a)


@lru_cache(maxsize=32)
def _folded_weights(n: int, K: int, kind: str, a: float):
    """Fold midpoint weights over the box ``[-L, L]^2`` onto periodic offsets.

    Returns ``(W, S)`` with ``W[m1, m2]`` the summed kernel weight of all
    offsets congruent to ``m`` and ``S`` the midpoint sum of ``|eta|^-a``
    (``a = alpha`` for ``kind='lambda'``, ``1`` for Riesz) used by the
    lattice correction.  For Riesz kinds, ``W`` carries the odd kernel of
    component ``kind[-1]``.
    """
    h = 2.0 * np.pi / n
    J = (2 * K + 1) * n // 2
    offs = np.arange(-J, J + 1)
    edge = np.ones(offs.size)
    edge[0] = edge[-1] = 0.5
    idx = np.mod(offs, n)
    W = np.zeros((n, n))
    S = 0.0
    e2 = offs * h
    for a1, w1 in zip(offs, edge):
        e1 = a1 * h
        r = np.hypot(e1, e2)
        w = w1 * edge * h * h
        if a1 == 0:
            r = np.where(offs == 0, np.inf, r)
        if kind == "lambda":
            row = w / r ** (2.0 + a)
        elif kind == "riesz1":
            row = w * e1 / r**3
        else:
            row = w * e2 / r**3
        W[a1 % n] += np.bincount(idx, weights=row, minlength=n)
        S += float(np.sum(w / r**a))
    W.setflags(write=False)
    return W, S


def _check_input(u, alpha=None):
    g = grid_of(u)
    if g.n > MAX_QUADRATURE_N:
        raise GridTooLarge(f"kernel quadrature limited to n <= {MAX_QUADRATURE_N}, got {g.n}")
    if alpha is not None and not 0.0 < alpha < 2.0:
        raise ValueError(f"quadrature needs 0 < alpha < 2, got {alpha!r}")
    return g


def _fd_laplacian(u, h):
    c = -60.0 * u
    for ax in (0, 1):
        c = c + 16.0 * (np.roll(u, 1, ax) + np.roll(u, -1, ax)) - (np.roll(u, 2, ax) + np.roll(u, -2, ax))
    return c / (12.0 * h * h)


def _fd_partial(u, h, ax):
    return (8.0 * (np.roll(u, -1, ax) - np.roll(u, 1, ax)) - (np.roll(u, -2, ax) - np.roll(u, 2, ax))) / (12.0 * h)


def _convolve(W, u, subtract_center):
    n = u.shape[0]
    out = np.zeros_like(u)
    for m1 in range(n):
        for m2 in range(n):
            w = W[m1, m2]
            if w == 0.0:
                continue
            shifted = np.roll(u, (m1, m2), axis=(0, 1))  # u(x - m h)
            out += w * (u - shifted) if subtract_center else w * shifted
    return out


def _symmetrize(W, odd):
    partner = np.roll(np.flip(W, axis=(0, 1)), 1, axis=(0, 1))
    return 0.5 * (W - partner) if odd else 0.5 * (W + partner)


def _enforce_budget(name, result: QuadratureResult):
    norm = float(np.max(np.abs(result.values), initial=0.0))
    if result.tail_estimate > TAIL_BUDGET * norm:
        raise TruncationTooSmall(
            f"{name}: tail estimate {result.tail_estimate:.3e} exceeds "
            f"{TAIL_BUDGET:.0%} of result norm {norm:.3e}; raise lattice_radius",
            tail_estimate=result.tail_estimate,
            result_norm=norm,
        )


def lambda_pow_quadrature(
    u: np.ndarray, alpha: float, trunc: KernelTruncation = KernelTruncation(), *, check_budget: bool = True
) -> QuadratureResult:
    """``Lambda^alpha u`` from the periodized singular-integral representation."""
    g = _check_input(u, alpha)
    u = np.asarray(u, dtype=float)
    K = int(trunc.lattice_radius)
    h = g.h
    L = (2 * K + 1) * np.pi
    c = fractional_constant(alpha)
    W, S = _folded_weights(g.n, K, "lambda", float(alpha))
    if trunc.pv_pairing:
        W = _symmetrize(W, odd=False)
    acc = _convolve(W, u, subtract_center=True)

    if trunc.singular == "cell":
        D = cell_integral(h, alpha)
    else:
        D = box_integral(L, alpha) - S
    acc += -0.25 * _fd_laplacian(u, h) * D

    ext = exterior_integral(L, alpha)
    fluct = u - np.mean(u)
    acc += fluct * ext
    tail = c * float(np.max(np.abs(fluct), initial=0.0)) * ext

    result = QuadratureResult(c * acc, tail, c)
    if check_budget:
        _enforce_budget(f"Lambda^{alpha}", result)
    return result


def riesz_quadrature(
    u: np.ndarray, j: int, trunc: KernelTruncation = KernelTruncation(), *, check_budget: bool = True,
    constant: float | None = None,
) -> QuadratureResult:
    """``R_j u`` from the periodized principal-value kernel ``y_j/|y|^3``.

    The per-cell constant shifts ``2 k_j pi / |2 k pi|^3`` of the image
    terms cancel between ``k`` and ``-k`` on the symmetric lattice and are
    therefore omitted.  ``constant`` overrides the kernel normalization
    (default: the one whose symbol is exactly ``-i k_j/|k|``).
    """
    if j not in (1, 2):
        raise ValueError(f"Riesz index must be 1 or 2, got {j!r}")
    g = _check_input(u)
    u = np.asarray(u, dtype=float)
    K = int(trunc.lattice_radius)
    h = g.h
    L = (2 * K + 1) * np.pi
    rc = operator_constants(1.0).riesz_kernel if constant is None else float(constant)
    W, S = _folded_weights(g.n, K, f"riesz{j}", 1.0)
    if trunc.pv_pairing:
        W = _symmetrize(W, odd=True)
    acc = _convolve(W, u, subtract_center=False)

    if trunc.singular == "cell":
        D = 0.5 * cell_integral(h, 1.0)
    else:
        D = 0.5 * (box_integral(L, 1.0) - S)
    acc += -_fd_partial(u, h, j - 1) * D

    fluct = float(np.max(np.abs(u - np.mean(u)), initial=0.0))
    tail = rc * fluct * 2.0 * np.pi / L
    result = QuadratureResult(rc * acc, tail, rc)
    if check_budget:
        _enforce_budget(f"R_{j}", result)
    return result


def theta_heat_kernel(n: int, t: float, images: int = 3) -> np.ndarray:
    """Periodic heat kernel at time ``t`` sampled at grid offsets ``m h``.

    Truncated theta-function sum ``sum_k (4 pi t)^-1 exp(-|eta + 2 pi k|^2 / 4t)``
    over ``|k|_inf <= images``.
    """
    h = 2.0 * np.pi / n
    m = np.arange(n)
    eta = np.where(m < n // 2, m, m - n) * h
    out = np.zeros((n, n))
    for a in range(-images, images + 1):
        e1 = (eta + 2 * np.pi * a)[:, None]
        for b in range(-images, images + 1):
            e2 = (eta + 2 * np.pi * b)[None, :]
            out += np.exp(-(e1 * e1 + e2 * e2) / (4.0 * t))
    return out / (4.0 * np.pi * t)


def heat_convolve_direct(u: np.ndarray, t: float, images: int = 3) -> np.ndarray:
    """Direct O(n^4) convolution with :func:`theta_heat_kernel`."""
    g = _check_input(u)
    W = theta_heat_kernel(g.n, t, images) * g.h**2
    return _convolve(W, np.asarray(u, dtype=float), subtract_center=False)
