"""A priori bound monitors, the maximum-principle probe and weak-form residuals.

Monitors read the persisted :class:`~fracscalar.diagnostics.DiagnosticsRecord`
stream of a trajectory.  Time integrals are trapezoid sums over record times.
Bounds with explicit right-hand sides are pass/fail; bounds whose constants
are only known to exist report a ratio instead (status ``"report"``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .diagnostics import AREA, admissible_s, lp_norm, sv_gap
from .drift import KS_DRIFTS, eval_drift
from .errors import HypothesisNotMet
from .grid import grid_of, integrate
from .operators import gradient, hs_seminorm, lambda_pow, laplacian, riesz

MONITORS = (
    "aee1",
    "aee2",
    "aee3",
    "aee3e",
    "aee4",
    "aee5",
    "aee6",
    "apstrong",
    "entropy",
    "divB",
    "sv",
    "ode32",
)

PASS_FAIL = {"aee1", "aee2", "aee3", "aee4", "entropy", "divB", "sv", "ode32"}


def alpha_smooth(chi: float, r: float) -> float:
    """Regularity threshold ``max(2 - 2r/chi, 0)``."""
    return max(2.0 - 2.0 * r / chi, 0.0)


def alpha_weak(chi: float, r: float) -> Optional[float]:
    """Weak-solution threshold; ``None`` stands for "every alpha > 0" (``2r >= chi``)."""
    if 2.0 * r >= chi:
        return None
    return 4.0 * (chi * (chi - 2.0 * r) / (chi - r) - r) / (2.0 * chi - r)


def mass_cap(u0: np.ndarray) -> float:
    return max(lp_norm(u0, 1), AREA)


@dataclass
class MonitorResult:
    monitor: str
    hypothesis_met: bool
    lhs: Optional[float] = None
    rhs_or_ratio: Optional[float] = None
    status: str = "skipped"
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def ok(self) -> bool:
        return self.status in ("green", "report", "skipped")


def _trapz(y, t) -> float:
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def _cumtrapz(y, t) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _verdict(lhs, rhs, tol) -> str:
    return "green" if lhs <= rhs * (1.0 + tol) else "violated"


class _Ctx:
    """Shared quantities for one ``check_bounds`` call."""

    def __init__(self, traj, p, s_max):
        self.records = traj.records
        self.p = p
        self.t = np.array([r.t for r in self.records])
        self.T = float(self.t[-1])
        self.u0 = traj.u0
        self.N = mass_cap(traj.u0)
        self.ks = p.drift.variant in KS_DRIFTS
        self.s = admissible_s(p.chi, p.r, s_max)

    def series(self, q: float) -> np.ndarray:
        return np.array([r.lp(q) for r in self.records])


def _aee1(c: _Ctx) -> MonitorResult:
    lhs = float(np.max(c.series(1.0)))
    return MonitorResult("aee1", True, lhs, c.N, _verdict(lhs, c.N, 1e-6), "sup_t ||u||_1 <= N")


def _aee2(c: _Ctx) -> MonitorResult:
    if c.p.r <= 0:
        return MonitorResult("aee2", False, detail="needs r > 0")
    lhs = _trapz(c.series(2.0) ** 2, c.t)
    rhs = c.N * (1.0 / c.p.r + c.T)
    return MonitorResult("aee2", True, lhs, rhs, _verdict(lhs, rhs, 1e-3), "int ||u||_2^2 <= N (1/r + T)")


def _needs_s(c: _Ctx, name: str) -> Optional[MonitorResult]:
    if not c.ks:
        return MonitorResult(name, False, detail=f"drift {c.p.drift.variant} is not a Keller-Segel coupling")
    if c.s is None:
        return MonitorResult(name, False, detail="needs r > 0 for an admissible s")
    return None


def _aee3(c: _Ctx) -> MonitorResult:
    skip = _needs_s(c, "aee3")
    if skip:
        return skip
    q = c.s + 1.0
    lhs = c.series(q)
    rhs = np.exp(c.p.r * c.t) * lp_norm(c.u0, q)
    ratio = lhs / np.where(rhs > 0, rhs, 1.0)
    worst = int(np.argmax(ratio))
    ok = bool(np.all(lhs <= rhs * (1.0 + 1e-3)))
    return MonitorResult(
        "aee3", True, float(lhs[worst]), float(rhs[worst]), "green" if ok else "violated",
        f"s={c.s:.6g}; worst record t={c.t[worst]:.6g}, ratio={ratio[worst]:.6g}",
    )


def _aee3e(c: _Ctx) -> MonitorResult:
    skip = _needs_s(c, "aee3e")
    if skip:
        return skip
    s, r = c.s, c.p.r
    sv = np.array([rec.sv_lhs.get(s, math.nan) for rec in c.records])
    if np.any(np.isnan(sv)):
        return MonitorResult("aee3e", False, detail="Stroock-Varopoulos sides at s were not recorded")
    # sv_lhs carries the 4s/(1+s)^2 factor; undo it to get ||Lambda^{a/2} u^{(s+1)/2}||^2
    lhs = _trapz(sv * (1 + s) ** 2 / (4 * s), c.t)
    u0_norm = lp_norm(c.u0, s + 1.0) ** (s + 1.0)
    rhs = r * (1 + s) ** 2 / (4 * s) * math.exp(r * c.T) * u0_norm
    derived = (1 + s) / (4 * s) * math.exp(r * (s + 1) * c.T) * u0_norm
    return MonitorResult(
        "aee3e", True, lhs, lhs / rhs, "report",
        f"ratio to the stated bound; ratio to (1+s)/(4s) e^(r(s+1)T) ||u0||^(s+1) is {lhs / derived:.6g}",
    )


def _aee4(c: _Ctx) -> MonitorResult:
    skip = _needs_s(c, "aee4")
    if skip:
        return skip
    s, r, chi = c.s, c.p.r, c.p.chi
    coef = r * (s + 1) - chi * s
    lhs = coef * _trapz(c.series(s + 2.0) ** (s + 2.0), c.t)
    rhs = (r * (s + 1) * math.exp(r * (s + 1) * c.T) + 1.0) * lp_norm(c.u0, s + 1.0) ** (s + 1.0)
    return MonitorResult("aee4", True, lhs, rhs, _verdict(lhs, rhs, 1e-3), f"s={s:.6g}, r(s+1)-chi s={coef:.6g}")


def _aee5(c: _Ctx) -> MonitorResult:
    skip = _needs_s(c, "aee5")
    if skip:
        return skip
    s5 = min(c.s, 1.0)
    w = np.array([rec.wsp.get("aee5", math.nan) for rec in c.records])
    if np.any(np.isnan(w)):
        return MonitorResult("aee5", False, detail="W^{s,p} seminorm was not recorded")
    lhs = _trapz(w ** (2 + 2 * s5), c.t)
    F1 = (c.p.r * c.T + s5 + 1) * math.exp(2 * c.p.r * c.T)
    denom = F1 * lp_norm(c.u0, 1 + s5) ** (2 + 2 * s5)
    return MonitorResult("aee5", True, lhs, lhs / denom, "report", f"s={s5:.6g}, delta=alpha/(4+4s)")


def _aee6(c: _Ctx) -> MonitorResult:
    if not c.ks or c.p.r <= 0:
        return MonitorResult("aee6", False, detail="needs a Keller-Segel drift and r > 0")
    w = np.array([rec.wsp.get("aee6", math.nan) for rec in c.records])
    if np.any(np.isnan(w)):
        return MonitorResult("aee6", False, detail="W^{s,1} seminorm was not recorded")
    lhs = _trapz(w**2, c.t)
    F2 = lp_norm(c.u0, 2.0) ** 2 + c.N * (c.p.chi + c.p.r + c.T + 1.0)
    return MonitorResult("aee6", True, lhs, lhs / (c.N * F2), "report", "delta=alpha/4")


def _apstrong(c: _Ctx, q: float = 4.0) -> MonitorResult:
    p = c.p
    if not c.ks or p.chi <= 0 or not p.alpha > 2.0 * (1.0 - p.r / p.chi):
        return MonitorResult("apstrong", False, detail="needs alpha > 2(1 - r/chi) and a Keller-Segel drift")
    lhs = float(np.max(c.series(q)))
    u0n = lp_norm(c.u0, q)
    return MonitorResult("apstrong", True, lhs, lhs / u0n if u0n > 0 else math.inf, "report", f"sup ||u||_{q:g} / ||u0||_{q:g}")


def _entropy(c: _Ctx) -> MonitorResult:
    p = c.p
    if not c.ks or p.r <= 0:
        return MonitorResult("entropy", False, detail="needs a Keller-Segel drift and r > 0")
    F = np.array([rec.entropy_F for rec in c.records])
    diss = _cumtrapz([rec.log_pairing for rec in c.records], c.t)
    lhs = F + diss
    u0sq = lp_norm(c.u0, 2.0) ** 2
    rhs = u0sq + 2.0 * c.N * (p.chi / p.r + c.t + 2 * math.pi**2 * p.r + 1.0)
    worst = int(np.argmax(lhs / rhs))
    ok = bool(np.all(lhs <= rhs * (1.0 + 1e-3)))
    return MonitorResult("entropy", True, float(lhs[worst]), float(rhs[worst]), "green" if ok else "violated",
                         "F(u) + int int Lambda^alpha u log u, checked at every record time")


def _divB(c: _Ctx) -> MonitorResult:
    if not c.ks:
        return MonitorResult("divB", False, detail="only defined for Keller-Segel couplings")
    m = np.array([rec.divB_margin for rec in c.records])
    if np.any(np.isnan(m)):
        return MonitorResult("divB", False, detail="div B margin was not recorded")
    scale = np.array([1.0 + rec.max_abs for rec in c.records])
    worst = int(np.argmax(m / scale))
    ok = bool(np.all(m <= 1e-8 * scale))
    return MonitorResult("divB", True, float(m[worst]), float(1e-8 * scale[worst]), "green" if ok else "violated",
                         "max(div B(u) - u) <= 1e-8 (1 + ||u||_inf)")


def _sv(c: _Ctx) -> MonitorResult:
    gaps = []
    for rec in c.records:
        for s, lhs in rec.sv_lhs.items():
            rhs = rec.sv_rhs[s]
            gaps.append((sv_gap(lhs, rhs, rec.sv_tail.get(s, 0.0)), lhs, rhs, s, rec.t))
    if not gaps:
        return MonitorResult("sv", False, detail="Stroock-Varopoulos sides were not recorded")
    worst = max(gaps, key=lambda g: g[0])
    ok = worst[0] <= 0
    return MonitorResult("sv", True, worst[1], worst[2], "green" if ok else "violated",
                         f"worst s={worst[3]:.6g} at t={worst[4]:.6g}; slack 1e-8 plus the unresolved share of the left side")


def _ode32(c: _Ctx, tol: float = 1e-2) -> MonitorResult:
    if not c.ks:
        return MonitorResult("ode32", False, detail="only defined for Keller-Segel couplings")
    res = ode_residual_series(c.records, c.p)
    if res.residual.size == 0:
        return MonitorResult("ode32", False, detail="needs at least two records")
    worst = float(np.max(res.residual))
    ok = worst <= tol * res.scale
    return MonitorResult("ode32", True, worst, tol * res.scale, "green" if ok else "violated",
                         "max of d(ubar)/dt - [chi ubar^2 + r ubar(1-ubar) - Lambda^alpha u(x*)]")


_DISPATCH = {
    "aee1": _aee1,
    "aee2": _aee2,
    "aee3": _aee3,
    "aee3e": _aee3e,
    "aee4": _aee4,
    "aee5": _aee5,
    "aee6": _aee6,
    "apstrong": _apstrong,
    "entropy": _entropy,
    "divB": _divB,
    "sv": _sv,
    "ode32": _ode32,
}


def check_bounds(traj, p, monitors: Sequence[str] = MONITORS, s_max: float = 3.0) -> list:
    """Evaluate each requested monitor on ``traj.records``; one result per name."""
    if len(traj.records) < 2:
        raise ValueError("check_bounds needs at least two records")
    unknown = [m for m in monitors if m not in _DISPATCH]
    if unknown:
        raise ValueError(f"unknown monitors {unknown}; available: {list(MONITORS)}")
    ctx = _Ctx(traj, p, s_max)
    return [_DISPATCH[m](ctx) for m in monitors]


def require(result: MonitorResult) -> MonitorResult:
    """Raise :class:`HypothesisNotMet` for a skipped monitor, else pass it through."""
    if not result.hypothesis_met:
        raise HypothesisNotMet(f"{result.monitor}: {result.detail}")
    return result


@dataclass
class OdeResidual:
    t: np.ndarray
    residual: np.ndarray
    scale: float

    @property
    def max(self) -> float:
        return float(np.max(self.residual)) if self.residual.size else math.nan


def ode_residual_series(records, p) -> OdeResidual:
    t = np.array([r.t for r in records])
    ub = np.array([r.max_u for r in records])
    lam = np.array([r.lam_at_max for r in records])
    if len(t) < 2:
        return OdeResidual(t[:0], t[:0], 1.0)
    dt = np.diff(t)
    dudt = np.diff(ub) / dt
    rhs = p.chi * ub**2 + p.r * ub * (1.0 - ub) - lam
    rhs_mid = 0.5 * (rhs[1:] + rhs[:-1])
    scale = max(1.0, float(np.max(p.chi * ub**2 + p.r * ub**2)))
    return OdeResidual(0.5 * (t[1:] + t[:-1]), dudt - rhs_mid, scale)


def ode_residual_monitor(traj, p) -> OdeResidual:
    """Signed residual of the maximum ODE inequality between consecutive records.

    ``d ubar/dt`` is a forward difference of ``max u``; the comparison term is
    averaged over the two records.  For Keller-Segel couplings the residual is
    expected to be ``<= 0`` up to discretization error.
    """
    return ode_residual_series(traj.records, p)


@dataclass
class MaxPrincipleReport:
    x_star: tuple
    index: tuple
    ubar: float
    lam_at_max: float
    wmp_ok: bool
    delta: float
    phi_holder: float
    bound: float
    chain_ok: bool
    phi_holder_literal: float
    chain_ok_literal: bool
    pairs: str = field(default="all")


def _phi(u: np.ndarray, h: float) -> np.ndarray:
    # phi[i, j] = h^2 sum_{a < i, b < j} u[a, b]
    c = np.cumsum(np.cumsum(u, axis=0), axis=1) * h * h
    out = np.zeros_like(c)
    out[1:, 1:] = c[:-1, :-1]
    return out


def max_principle_probe(
    u: np.ndarray, alpha: float, p0: float, *, max_pairs: int = 10**6, seed: int = 0
) -> MaxPrincipleReport:
    """Check the two ingredients of the nonlinear maximum principle on a field.

    (a) ``Lambda^alpha u(x*) >= -1e-8 ||u||_{H^alpha}`` at the grid maximum.
    (b) With ``phi(x) = int_{-pi}^{x1} int_{-pi}^{x2} u`` and ``delta = 2(p0-1)/p0``,
    the Hoelder quotient of the rectangle increment
    ``phi(x+h) - phi(x1+h1, x2) - phi(x1, x2+h2) + phi(x)`` is at most
    ``2^((1-p0)/p0) ||u||_{L^p0}``.  That increment is exactly the integral of
    ``u`` over the rectangle, so discrete Hoelder makes (b) hold on the grid.
    The plain quotient ``|phi(x) - phi(y)| / |x - y|^delta`` is reported too
    (``phi_holder_literal``); it is not controlled by ``||u||_{L^p0}`` alone.

    All pairs are used for ``n <= 32``; above that ``max_pairs`` random pairs.
    """
    if not 1.0 < p0 < 2.0:
        raise ValueError(f"p0 must lie in (1, 2), got {p0!r}")
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    n, h = g.n, g.h
    idx = np.unravel_index(int(np.argmax(u)), u.shape)
    lam = lambda_pow(u, alpha)
    lam_max = float(lam[idx])
    wmp_ok = lam_max >= -1e-8 * max(hs_seminorm(u, alpha), 1e-300)
    delta = 2.0 * (p0 - 1.0) / p0
    bound = 2.0 ** ((1.0 - p0) / p0) * lp_norm(u, p0)
    phi = _phi(u, h)

    if n <= 32:
        mixed = 0.0
        literal = 0.0
        for a in range(n):
            for b in range(-(n - 1), n):
                if a == 0 and b <= 0:
                    continue
                dist = h * math.hypot(a, b)
                w = dist ** (-delta)
                if b >= 0:
                    lo, hi = phi[: n - a, : n - b], phi[a:, b:]
                else:
                    lo, hi = phi[: n - a, -b:], phi[a:, : n + b]
                literal = max(literal, float(np.max(np.abs(hi - lo))) * w)
                if a > 0 and b > 0:
                    rect = phi[a:, b:] - phi[: n - a, b:] - phi[a:, : n - b] + phi[: n - a, : n - b]
                    mixed = max(mixed, float(np.max(np.abs(rect))) * w)
        pairs = "all"
    else:
        rng = np.random.default_rng(seed)
        i1, i2, j1, j2 = (rng.integers(0, n, size=max_pairs) for _ in range(4))
        dist = h * np.hypot(i2 - i1, j2 - j1)
        keep = dist > 0
        i1, i2, j1, j2, dist = i1[keep], i2[keep], j1[keep], j2[keep], dist[keep]
        w = dist ** (-delta)
        literal = float(np.max(np.abs(phi[i2, j2] - phi[i1, j1]) * w))
        rect = phi[i2, j2] - phi[i1, j2] - phi[i2, j1] + phi[i1, j1]
        mixed = float(np.max(np.abs(rect) * w))
        pairs = f"random {int(keep.sum())}"

    tol = 1e-12 * max(bound, 1e-300)
    return MaxPrincipleReport(
        x_star=(float(g.x[idx[0]]), float(g.x[idx[1]])),
        index=(int(idx[0]), int(idx[1])),
        ubar=float(u[idx]),
        lam_at_max=lam_max,
        wmp_ok=bool(wmp_ok),
        delta=delta,
        phi_holder=mixed,
        bound=bound,
        chain_ok=bool(mixed <= bound + tol),
        phi_holder_literal=literal,
        chain_ok_literal=bool(literal <= bound + tol),
        pairs=pairs,
    )


def _forcing(u: np.ndarray, p) -> np.ndarray:
    if p.forcing == "logistic":
        return p.r * u * (1.0 - u)
    if p.forcing == "riesz":
        return riesz(u, 1)
    return np.zeros_like(u)


def weak_residual(traj, p, testfn: Callable) -> float:
    """Space-time residual of the weak formulation for a smooth test function.

    ``testfn(x1, x2, t)`` returns ``(phi, dphi_dt)`` on the grid.  The
    residual is

        int_0^T int [u(-phi_t + Lambda^alpha phi - eps Delta phi)
                     + chi u B(u).grad phi - f(u) phi] dx dt
        - int u0 phi(0) + int u(T) phi(T)

    The last term vanishes for test functions supported in ``t < T``.
    Needs a trajectory run with ``store_fields=True``.
    """
    if not traj.snapshots:
        raise ValueError("weak_residual needs stored snapshots (run with store_fields=True)")
    X1, X2 = grid_of(traj.u0).mesh
    ts, vals = [], []
    for t, u in traj.snapshots:
        phi, phi_t = testfn(X1, X2, t)
        phi = np.broadcast_to(np.asarray(phi, dtype=float), u.shape)
        phi_t = np.broadcast_to(np.asarray(phi_t, dtype=float), u.shape)
        integrand = u * (-phi_t + lambda_pow(phi, p.alpha))
        if p.eps_viscosity:
            integrand -= p.eps_viscosity * u * laplacian(phi)
        if p.chi:
            b1, b2 = eval_drift(u, p.drift)
            g1, g2 = gradient(phi)
            integrand += p.chi * u * (b1 * g1 + b2 * g2)
        integrand -= _forcing(u, p) * phi
        ts.append(t)
        vals.append(integrate(integrand))
    t0, u0 = traj.snapshots[0]
    tN, uN = traj.snapshots[-1]
    phi0, _ = testfn(X1, X2, t0)
    phiN, _ = testfn(X1, X2, tN)
    boundary = -integrate(u0 * np.broadcast_to(phi0, u0.shape)) + integrate(uN * np.broadcast_to(phiN, uN.shape))
    return _trapz(vals, ts) + boundary
