"""Drift operators B(u) for the active-scalar family.

Every variant is a pair of Fourier multipliers ``(m1, m2)`` so that
``B_j(u)^ = m_j(k) u^(k)``.  With ``d_j <-> i k_j`` and ``R_j <-> -i k_j/|k|``:

=================  =====================================================
``ks_screened``    ``Lambda^{beta-1} R (1 + Lambda^beta)^{-1} u``
``ks_poisson``     ``grad Delta^{-1} (u - <u>)``
``euler``          ``(-d_2, d_1) (-Delta)^{-1} u``
``sqg``            ``(-d_2, d_1) Lambda^{-1} u``
``ipm``            ``-R^perp R_1 u`` with ``R^perp = (-R_2, R_1)``
``stokes``         ``(-Delta)^{-1} R^perp R_1 u``
``aggregation``    ``grad K * u`` for a real, even kernel symbol ``K^(k)``
=================  =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NegativeInput
from .grid import get_grid, grid_of
from .operators import inv_one_plus_lambda_beta, lambda_symbol

DRIFT_TAGS = {
    "ks_screened": 0,
    "ks_poisson": 1,
    "euler": 2,
    "sqg": 3,
    "ipm": 4,
    "stokes": 5,
    "aggregation": 6,
}

KS_DRIFTS = ("ks_screened", "ks_poisson")


def _newtonian(k1, k2, width):
    kk2 = k1 * k1 + k2 * k2
    with np.errstate(divide="ignore"):
        return np.where(kk2 == 0, 0.0, -1.0 / kk2)


def _bessel(k1, k2, width):
    return -1.0 / (width**2 + k1 * k1 + k2 * k2)


def _gaussian(k1, k2, width):
    return -np.exp(-0.5 * width**2 * (k1 * k1 + k2 * k2))


# Attractive interaction kernels by name: symbol(k1, k2, width).
AGGREGATION_KERNELS = {
    "newtonian": (0, _newtonian),
    "bessel": (1, _bessel),
    "gaussian": (2, _gaussian),
}


@dataclass(frozen=True)
class DriftSpec:
    """Choice of drift operator.

    ``beta`` is used by ``ks_screened`` only.  ``aggregation`` takes either a
    named kernel (``kernel``/``width``) or an explicit ``kernel_symbol``
    callable ``(k1, k2) -> real array`` that must be even and real.
    """

    variant: str
    beta: float = 2.0
    kernel: str = "newtonian"
    width: float = 1.0
    kernel_symbol: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in DRIFT_TAGS:
            raise ValueError(f"unknown drift {self.variant!r}; expected one of {sorted(DRIFT_TAGS)}")
        if self.variant == "ks_screened" and not self.beta > 0:
            raise ValueError(f"ks_screened needs beta > 0, got {self.beta!r}")
        if self.variant == "aggregation":
            if self.kernel_symbol is None and self.kernel not in AGGREGATION_KERNELS:
                raise ValueError(f"unknown aggregation kernel {self.kernel!r}")
            _check_even_real(self.kernel_function())

    @property
    def tag(self) -> int:
        return DRIFT_TAGS[self.variant]

    def kernel_function(self) -> Callable:
        if self.kernel_symbol is not None:
            return self.kernel_symbol
        fn = AGGREGATION_KERNELS[self.kernel][1]
        width = self.width
        return lambda k1, k2: fn(k1, k2, width)

    def to_dict(self) -> dict:
        out = {"drift": self.variant}
        if self.variant == "ks_screened":
            out["beta"] = self.beta
        if self.variant == "aggregation":
            if self.kernel_symbol is not None:
                raise ValueError("aggregation drift with a custom kernel_symbol is not serializable")
            out.update(kernel=self.kernel, width=self.width)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSpec":
        d = dict(d)
        variant = d.pop("drift")
        return cls(variant, **d)


def _check_even_real(fn) -> None:
    g = get_grid(16)
    k1, k2 = g.full_k
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(fn(k1, k2))
        flip = np.asarray(fn(-k1, -k2))
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag)) > 0:
        raise ValueError("aggregation kernel symbol must be real")
    if np.max(np.abs(vals - flip)) > 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
        raise ValueError("aggregation kernel symbol must be even in k")


def _raw_symbols(spec: DriftSpec, k1, k2):
    kk2 = k1 * k1 + k2 * k2
    zero = kk2 == 0
    safe2 = np.where(zero, 1.0, kk2)
    safe = np.sqrt(safe2)
    v = spec.variant
    if v == "ks_screened":
        beta = spec.beta
        amp = np.where(zero, 0.0, safe ** (beta - 2.0) / (1.0 + lambda_symbol(k1, k2, beta)))
        return -1j * k1 * amp, -1j * k2 * amp
    if v == "ks_poisson":
        amp = np.where(zero, 0.0, 1.0 / safe2)
        return -1j * k1 * amp, -1j * k2 * amp
    if v == "euler":
        amp = np.where(zero, 0.0, 1.0 / safe2)
        return -1j * k2 * amp, 1j * k1 * amp
    if v == "sqg":
        amp = np.where(zero, 0.0, 1.0 / safe)
        return -1j * k2 * amp, 1j * k1 * amp
    if v == "ipm":
        amp = np.where(zero, 0.0, 1.0 / safe2)
        return -k1 * k2 * amp + 0j, k1 * k1 * amp + 0j
    if v == "stokes":
        amp = np.where(zero, 0.0, 1.0 / safe2**2)
        return k1 * k2 * amp + 0j, -k1 * k1 * amp + 0j
    with np.errstate(divide="ignore", invalid="ignore"):
        kh = np.asarray(spec.kernel_function()(k1, k2), dtype=float)
    kh = np.where(np.isfinite(kh), kh, 0.0)
    return 1j * k1 * kh, 1j * k2 * kh


def drift_symbols(spec: DriftSpec, k1: np.ndarray, k2: np.ndarray, n: int):
    """Multipliers ``(m1, m2)`` of ``B`` on the wavenumber arrays ``k1, k2``.

    On the unpaired modes ``|k_j| = n/2`` a symbol survives only if it is
    even in ``k_j``; otherwise the discrete field would not stay real.
    """
    m = _raw_symbols(spec, k1, k2)
    flip1 = _raw_symbols(spec, -k1, k2)
    flip2 = _raw_symbols(spec, k1, -k2)
    nyq = n // 2
    out = []
    for mj, f1, f2 in zip(m, flip1, flip2):
        bad = ((np.abs(k1) == nyq) & (mj != f1)) | ((np.abs(k2) == nyq) & (mj != f2))
        out.append(np.where(bad, 0.0, mj))
    return out[0], out[1]


def eval_drift(u: np.ndarray, spec: DriftSpec) -> tuple[np.ndarray, np.ndarray]:
    """The vector field ``B(u) = (B_1, B_2)`` on the grid of ``u``."""
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    k1, k2 = g.half_k
    m1, m2 = drift_symbols(spec, k1, k2, g.n)
    uh = g.rfft(u)
    return g.irfft(m1 * uh), g.irfft(m2 * uh)


def div_drift(u: np.ndarray, spec: DriftSpec) -> np.ndarray:
    """``div B(u)``, using the closed forms where they exist."""
    u = np.asarray(u, dtype=float)
    v = spec.variant
    if v == "ks_poisson":
        return u - np.mean(u)
    if v == "ks_screened":
        return u - inv_one_plus_lambda_beta(u, spec.beta)
    if v in ("euler", "sqg"):
        return np.zeros_like(u)
    g = grid_of(u)
    k1, k2 = g.half_k
    m1, m2 = drift_symbols(spec, k1, k2, g.n)
    nyq = g.n // 2
    d1 = np.where(np.abs(k1) == nyq, 0.0, 1j * k1)
    d2 = np.where(np.abs(k2) == nyq, 0.0, 1j * k2)
    return g.irfft((d1 * m1 + d2 * m2) * g.rfft(u))


@dataclass(frozen=True)
class ScreenedPositivity:
    min_v: float
    ok: bool
    tol: float


def check_screened_positivity(u: np.ndarray, beta: float) -> ScreenedPositivity:
    """Weak minimum principle for ``v = (1 + Lambda^beta)^{-1} u`` with ``u >= 0``."""
    u = np.asarray(u, dtype=float)
    umin = float(np.min(u))
    if umin < -1e-6:
        raise NegativeInput(f"check_screened_positivity needs u >= 0, min(u) = {umin:.3e}")
    v = inv_one_plus_lambda_beta(u, beta)
    tol = 1e-8 * (1.0 + float(np.max(np.abs(u))))
    min_v = float(np.min(v))
    return ScreenedPositivity(min_v=min_v, ok=min_v >= -tol, tol=tol)
