"""Norms, functionals and per-record diagnostics along a trajectory."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma

from .drift import KS_DRIFTS, div_drift
from .errors import GridTooLarge
from .grid import AREA, grid_of, integrate
from .kernels import cell_integral
from .operators import gradient, hs_seminorm, lambda_pow

LOG_FLOOR = 1e-12
WSP_MAX_N = 64


def lp_norm(u: np.ndarray, p: float) -> float:
    """``(int |u|^p)^(1/p)`` by grid quadrature; ``p = inf`` gives ``max |u|``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    u = np.abs(np.asarray(u, dtype=float))
    if math.isinf(p):
        return float(np.max(u))
    if p == 1:
        return integrate(u)
    # scale out the max so large p does not overflow
    m = float(np.max(u))
    if m == 0.0:
        return 0.0
    return m * integrate((u / m) ** p) ** (1.0 / p)


def lp_ball_constant(p: float) -> float:
    """Mean of ``|cos theta|^p`` over the circle."""
    return float(gamma((p + 1) / 2) / (math.sqrt(math.pi) * gamma(p / 2 + 1)))


def _torus_dist(n: int) -> np.ndarray:
    h = 2.0 * np.pi / n
    i = np.arange(n)
    d = h * np.minimum(i, n - i)
    return np.hypot(d[:, None], d[None, :])


def wsp_seminorm(u: np.ndarray, s: float, p: float, *, diagonal_cell: bool = True) -> float:
    """Gagliardo seminorm of ``W^{s,p}`` by a double grid sum.

    Sums ``|u(x) - u(y)|^p / dist(x, y)^(2 + s p) h^4`` over ordered pairs
    ``x != y`` with ``dist`` the geodesic distance on the torus.  On its own
    the sum converges like ``h^(p - s p)``.  With ``diagonal_cell`` the
    excluded cell around ``y = x`` is added back from the first-order Taylor
    term ``|grad u . eta|^p``, angle-averaged, which restores fast convergence
    for smooth fields.
    """
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    if g.n > WSP_MAX_N:
        raise GridTooLarge(f"wsp_seminorm is O(n^4); n = {g.n} exceeds {WSP_MAX_N}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    n = g.n
    dist = _torus_dist(n)
    with np.errstate(divide="ignore"):
        weight = np.where(dist > 0, dist ** -(2.0 + s * p), 0.0)
    total = 0.0
    # rows: shift along axis 0 once, then all axis-1 shifts at once
    cols = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n  # [b, j] -> j + b
    for a in range(n):
        ua = np.roll(u, -a, axis=0)
        shifted = ua[:, cols]  # [i, b, j] = u(i + a, j + b)
        diff = np.abs(shifted - u[:, None, :]) ** p
        total += float(np.sum(diff.sum(axis=(0, 2)) * weight[a]))
    total *= g.h**4
    if diagonal_cell:
        g1, g2 = gradient(u)
        grad_p = integrate(np.hypot(g1, g2) ** p)
        total += grad_p * lp_ball_constant(p) * cell_integral(g.h, 2.0 + s * p - p)
    return total ** (1.0 / p)


def _clamped(u: np.ndarray) -> np.ndarray:
    return np.maximum(u, LOG_FLOOR)


def entropy(u: np.ndarray) -> float:
    """``int u log u - u + 1`` with ``u`` floored at ``1e-12`` inside the log."""
    u = np.asarray(u, dtype=float)
    return integrate(u * np.log(_clamped(u)) - u + 1.0)


def dissipation_pairing(u: np.ndarray, alpha: float, s: float) -> float:
    """``int Lambda^alpha u * u^s``; negative undershoots are clamped to zero in ``u^s``."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    u = np.asarray(u, dtype=float)
    us = u if s == 1 else np.maximum(u, 0.0) ** s
    return integrate(lambda_pow(u, alpha) * us)


def log_pairing(u: np.ndarray, alpha: float) -> float:
    """``int Lambda^alpha u * log u`` with the entropy floor."""
    u = np.asarray(u, dtype=float)
    return integrate(lambda_pow(u, alpha) * np.log(_clamped(u)))


def stroock_varopoulos_sides(u: np.ndarray, alpha: float, s: float) -> tuple[float, float]:
    """``(4s/(1+s)^2 ||Lambda^{alpha/2} u^{(s+1)/2}||^2, int Lambda^alpha u u^s)``."""
    u = np.asarray(u, dtype=float)
    w = np.maximum(u, 0.0) ** ((s + 1.0) / 2.0) if s != 1 else u
    lhs = 4.0 * s / (1.0 + s) ** 2 * hs_seminorm(w, alpha / 2.0) ** 2
    return lhs, dissipation_pairing(u, alpha, s)


def sv_tail(u: np.ndarray, alpha: float, s: float) -> float:
    """Share of ``||Lambda^{alpha/2} u^{(s+1)/2}||^2`` carried by ``|k| > n/3``.

    The grid operator is not a Markov generator, so the inequality holds on the
    grid only up to the unresolved part of ``u^{(s+1)/2}``; this is its size.
    """
    u = np.asarray(u, dtype=float)
    w = np.maximum(u, 0.0) ** ((s + 1.0) / 2.0) if s != 1 else u
    g = grid_of(w)
    k1, k2 = g.full_k
    e = (k1 * k1 + k2 * k2) ** (alpha / 2.0) * np.abs(np.fft.fft2(w)) ** 2
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    return float(np.sum(e[np.hypot(k1, k2) > g.n / 3.0]) / total)


def sv_gap(lhs: float, rhs: float, tail: float = 0.0) -> float:
    """``lhs - rhs`` minus the allowed slack; ``<= 0`` means the inequality holds."""
    return lhs - rhs - (1e-8 * max(1.0, abs(rhs)) + abs(lhs) * tail)


def holder_consistent(lp: dict, rtol: float = 1e-12) -> bool:
    """``||u||_p / area^(1/p)`` must be nondecreasing in ``p``."""
    keys = sorted(lp)
    vals = [lp[p] / (AREA ** (1.0 / p) if not math.isinf(p) else 1.0) for p in keys]
    return all(b >= a * (1 - rtol) - 1e-300 for a, b in zip(vals, vals[1:]))


def restrict(u: np.ndarray, m: int) -> np.ndarray:
    """Spectral truncation of ``u`` onto an ``m x m`` grid (``m <= n``)."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if m == n:
        return u.copy()
    if m > n:
        raise ValueError(f"cannot restrict an n={n} field to m={m}")
    c = np.fft.fftshift(np.fft.fft2(u))
    lo = n // 2 - m // 2
    c = c[lo : lo + m, lo : lo + m].copy()
    # drop the unpaired Nyquist row/column of the coarse grid
    c[0, :] = 0.0
    c[:, 0] = 0.0
    return np.real(np.fft.ifft2(np.fft.ifftshift(c))) * (m * m) / (n * n)


def admissible_s(chi: float, r: float, s_max: float = 3.0) -> Optional[float]:
    """Largest ``s`` with ``chi s/(s+1) <= r``, capped at ``s_max``; ``None`` if ``r = 0``."""
    if r <= 0:
        return None
    if chi <= r:
        return float(s_max)
    return min(r / (chi - r), float(s_max))


def critical_p0(chi: float, r: float) -> Optional[float]:
    """``p0 = chi/(chi - r)`` for ``0 < r < chi``."""
    if r <= 0 or chi <= r:
        return None
    return chi / (chi - r)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".10g")


@dataclass(frozen=True)
class RecordPlan:
    """Which quantities each record carries.

    ``wsp`` lists ``(name, s, p)`` seminorms evaluated on a spectral
    restriction of the field to ``wsp_n`` points per side.
    """

    ps: tuple = (1.0, 2.0, math.inf)
    hs: tuple = ()
    dissipation_s: tuple = ()
    sv_s: tuple = ()
    wsp: tuple = ()
    wsp_n: int = 32
    divB: bool = True
    aee_s: Optional[float] = None
    aee5_s: Optional[float] = None
    p_strong: float = 4.0

    @classmethod
    def for_params(cls, p, n: int, s_max: float = 3.0, with_wsp: bool = True) -> "RecordPlan":
        s = admissible_s(p.chi, p.r, s_max)
        ps = {1.0, 2.0, math.inf, 4.0}
        p0 = critical_p0(p.chi, p.r)
        if p0 is not None:
            ps.add(p0)
        sv_s = [1.0]
        wsp = []
        s5 = None
        if s is not None:
            ps.update({s + 1.0, s + 2.0})
            sv_s.append(s)
            s5 = min(s, 1.0)
            ps.add(s5 + 1.0)
            if with_wsp:
                wsp.append(("aee5", p.alpha / (4.0 + 4.0 * s5), 1.0 + s5))
        if with_wsp:
            wsp.append(("aee6", p.alpha / 4.0, 1.0))
        return cls(
            ps=tuple(sorted(ps)),
            hs=(p.alpha / 2.0,),
            dissipation_s=tuple(sorted(set(sv_s))),
            sv_s=tuple(sorted(set(sv_s))),
            wsp=tuple(wsp),
            wsp_n=min(32, n),
            divB=p.drift.variant in KS_DRIFTS,
            aee_s=s,
            aee5_s=s5,
        )


@dataclass
class DiagnosticsRecord:
    """One time slice of the monitored quantities."""

    t: float
    step: int
    dt: float
    mass: float
    min_u: float
    max_u: float
    max_abs: float
    argmax: tuple
    lam_at_max: float
    entropy_F: float
    log_pairing: float
    spectral_tail: float
    linf_time_integral: float
    divB_margin: float = float("nan")
    lp_norms: dict = field(default_factory=dict)
    hs_seminorm: dict = field(default_factory=dict)
    dissipation_s: dict = field(default_factory=dict)
    sv_lhs: dict = field(default_factory=dict)
    sv_rhs: dict = field(default_factory=dict)
    sv_tail: dict = field(default_factory=dict)
    wsp: dict = field(default_factory=dict)
    holder_ok: bool = True

    def lp(self, p: float) -> float:
        for key, val in self.lp_norms.items():
            if key == p or (math.isfinite(key) and math.isfinite(p) and abs(key - p) < 1e-9):
                return val
        raise KeyError(f"L^{p} norm was not recorded")

    def to_row(self) -> dict:
        row = {
            "t": self.t,
            "step": self.step,
            "dt": self.dt,
            "mass": self.mass,
            "min_u": self.min_u,
            "max_u": self.max_u,
            "max_abs": self.max_abs,
            "argmax_i": self.argmax[0],
            "argmax_j": self.argmax[1],
            "lam_at_max": self.lam_at_max,
            "entropy": self.entropy_F,
            "log_pairing": self.log_pairing,
            "spectral_tail": self.spectral_tail,
            "linf_time_integral": self.linf_time_integral,
            "divB_margin": self.divB_margin,
            "holder_ok": int(self.holder_ok),
        }
        for prefix, d in (
            ("Lp", self.lp_norms),
            ("Hs", self.hs_seminorm),
            ("diss", self.dissipation_s),
            ("sv_lhs", self.sv_lhs),
            ("sv_rhs", self.sv_rhs),
            ("sv_tail", self.sv_tail),
        ):
            for key, val in d.items():
                row[f"{prefix}[{_fmt(key)}]"] = val
        for name, val in self.wsp.items():
            row[f"wsp[{name}]"] = val
        return row

    @classmethod
    def from_row(cls, row: dict) -> "DiagnosticsRecord":
        maps = {"Lp": {}, "Hs": {}, "diss": {}, "sv_lhs": {}, "sv_rhs": {}, "sv_tail": {}, "wsp": {}}
        for key, val in row.items():
            if "[" in key:
                prefix, arg = key[:-1].split("[", 1)
                maps[prefix][arg if prefix == "wsp" else float(arg)] = float(val)
        return cls(
            t=float(row["t"]),
            step=int(row["step"]),
            dt=float(row["dt"]),
            mass=float(row["mass"]),
            min_u=float(row["min_u"]),
            max_u=float(row["max_u"]),
            max_abs=float(row["max_abs"]),
            argmax=(int(row["argmax_i"]), int(row["argmax_j"])),
            lam_at_max=float(row["lam_at_max"]),
            entropy_F=float(row["entropy"]),
            log_pairing=float(row["log_pairing"]),
            spectral_tail=float(row["spectral_tail"]),
            linf_time_integral=float(row["linf_time_integral"]),
            divB_margin=float(row["divB_margin"]),
            lp_norms=maps["Lp"],
            hs_seminorm=maps["Hs"],
            dissipation_s=maps["diss"],
            sv_lhs=maps["sv_lhs"],
            sv_rhs=maps["sv_rhs"],
            sv_tail=maps["sv_tail"],
            wsp=maps["wsp"],
            holder_ok=bool(int(float(row["holder_ok"]))),
        )


def compute_record(
    u: np.ndarray,
    p,
    plan: RecordPlan,
    *,
    t: float = 0.0,
    step: int = 0,
    dt: float = 0.0,
    linf_integral: float = 0.0,
) -> DiagnosticsRecord:
    """Evaluate every quantity in ``plan`` on the field ``u``."""
    from .evolution import spectral_tail

    u = np.asarray(u, dtype=float)
    lam_u = lambda_pow(u, p.alpha)
    idx = np.unravel_index(int(np.argmax(u)), u.shape)
    lp = {float(q): lp_norm(u, q) for q in plan.ps}
    rec = DiagnosticsRecord(
        t=float(t),
        step=int(step),
        dt=float(dt),
        mass=integrate(u),
        min_u=float(np.min(u)),
        max_u=float(u[idx]),
        max_abs=float(np.max(np.abs(u))),
        argmax=(int(idx[0]), int(idx[1])),
        lam_at_max=float(lam_u[idx]),
        entropy_F=entropy(u),
        log_pairing=integrate(lam_u * np.log(_clamped(u))),
        spectral_tail=spectral_tail(u),
        linf_time_integral=float(linf_integral),
        lp_norms=lp,
        holder_ok=holder_consistent(lp),
    )
    for s in plan.hs:
        rec.hs_seminorm[float(s)] = hs_seminorm(u, s)
    for s in plan.dissipation_s:
        rec.dissipation_s[float(s)] = dissipation_pairing(u, p.alpha, s)
    for s in plan.sv_s:
        lhs, rhs = stroock_varopoulos_sides(u, p.alpha, s)
        rec.sv_lhs[float(s)] = lhs
        rec.sv_rhs[float(s)] = rhs
        rec.sv_tail[float(s)] = sv_tail(u, p.alpha, s)
    if plan.wsp:
        coarse = restrict(u, min(plan.wsp_n, u.shape[0]))
        for name, s, q in plan.wsp:
            rec.wsp[name] = wsp_seminorm(coarse, s, q)
    if plan.divB:
        rec.divB_margin = float(np.max(div_drift(u, p.drift) - u))
    return rec


def write_records_csv(path, records: Sequence[DiagnosticsRecord]) -> None:
    rows = [r.to_row() for r in records]
    fields: list = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_records_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return [DiagnosticsRecord.from_row({k: v for k, v in row.items() if v != ""}) for row in csv.DictReader(fh)]

