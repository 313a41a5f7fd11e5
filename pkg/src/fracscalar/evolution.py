"""Time integration of the damped fractional drift-diffusion equation

    u_t = -Lambda^alpha u + eps Delta u + chi div(u B(u)) + f(u)

on the periodic square.  The linear dissipation ``lambda_k = |k|^alpha +
eps |k|^2`` is treated implicitly (or exactly) in Fourier space; transport
and forcing are explicit.

Schemes
-------
``imex1``
    ``u^{n+1} = (u^n + dt N^n) / (1 + dt lambda)``.
``imex1_exp``
    Exponential Euler, ``u^{n+1} = e^{-dt lambda} u^n + dt phi_1(-dt lambda) N^n``
    with ``phi_1(z) = (e^z - 1)/z``.  Exact for linear decay.
``imex2``
    Variable-step SBDF2.  With ``w = dt_n / dt_{n-1}``::

        (1+2w)/(1+w) u^{n+1} - (1+w) u^n + w^2/(1+w) u^{n-1}
            = dt [(1+w) N^n - w N^{n-1}] - dt lambda u^{n+1}

    The first step is taken with ``imex1``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .drift import KS_DRIFTS, DriftSpec, drift_symbols
from .errors import ConfigError, Unstable
from .grid import get_grid, grid_of
from .operators import heat_mollify, lambda_symbol, riesz_symbol

log = logging.getLogger(__name__)

FORCINGS = ("logistic", "riesz", "none")
SCHEMES = ("imex1", "imex1_exp", "imex2")

BLOWUP_LINF = 1e8
TAIL_LIMIT = 0.01


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the model.

    ``beta`` is read from the drift (it only matters for ``ks_screened``).
    ``chi = 0`` is accepted so that pure decay and pure logistic runs can be
    expressed with the same object.
    """

    alpha: float
    chi: float = 1.0
    r: float = 0.0
    eps_viscosity: float = 0.0
    drift: DriftSpec = field(default_factory=lambda: DriftSpec("ks_poisson"))
    forcing: str = "logistic"

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ConfigError("alpha", f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not self.chi >= 0.0:
            raise ConfigError("chi", f"chi must be >= 0, got {self.chi!r}")
        if not self.r >= 0.0:
            raise ConfigError("r", f"r must be >= 0, got {self.r!r}")
        if not self.eps_viscosity >= 0.0:
            raise ConfigError("eps_viscosity", f"eps_viscosity must be >= 0, got {self.eps_viscosity!r}")
        if self.forcing not in FORCINGS:
            raise ConfigError("forcing", f"forcing must be one of {FORCINGS}, got {self.forcing!r}")

    @property
    def beta(self) -> float:
        return self.drift.beta

    @property
    def is_keller_segel(self) -> bool:
        return self.drift.variant in KS_DRIFTS

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "chi": self.chi,
            "r": self.r,
            "eps_viscosity": self.eps_viscosity,
            "drift": self.drift.to_dict(),
            "forcing": self.forcing,
        }


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping controls.  ``dt=None`` selects the adaptive CFL step."""

    dt: Optional[float] = None
    scheme: str = "imex1"
    cfl_safety: float = 0.5
    dealias: bool = True
    dt_max: float = 1e-2
    dt_min: float = 1e-10
    max_steps: int = 10_000_000
    clamp_negative: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt", f"dt must be positive, got {self.dt!r}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ConfigError("cfl_safety", f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")
        if not self.dt_max > 0:
            raise ConfigError("dt_max", f"dt_max must be positive, got {self.dt_max!r}")

    @property
    def adaptive(self) -> bool:
        return self.dt is None


@dataclass
class State:
    """Solution ``u`` at time ``t``.

    ``prev`` holds ``(u_hat, N_hat, dt)`` of the previous step for ``imex2``;
    it is ``None`` at the start of a run.
    """

    t: float
    u: np.ndarray
    prev: Optional[tuple] = field(default=None, repr=False)


class _Operators:
    """Fourier symbols for one ``(n, params)`` pair on the rfft half-grid."""

    def __init__(self, n: int, p: ModelParams):
        g = get_grid(n)
        k1, k2 = g.half_k
        self.grid = g
        self.lam = lambda_symbol(k1, k2, p.alpha) + p.eps_viscosity * (k1 * k1 + k2 * k2)
        self.mask = g.dealias_mask("half")
        nyq = n // 2
        self.d1 = np.where(np.abs(k1) == nyq, 0.0, 1j * k1)
        self.d2 = np.where(np.abs(k2) == nyq, 0.0, 1j * k2)
        self.m1, self.m2 = drift_symbols(p.drift, k1, k2, n)
        self.divm = self.d1 * self.m1 + self.d2 * self.m2
        self.div_free = p.drift.variant in ("euler", "sqg")
        self.riesz1 = riesz_symbol(k1, k2, 1, n) if p.forcing == "riesz" else None


@lru_cache(maxsize=8)
def _ops_cached(n: int, p: ModelParams) -> _Operators:
    return _Operators(n, p)


def _ops(n: int, p: ModelParams) -> _Operators:
    if p.drift.kernel_symbol is not None:
        # custom symbols compare equal regardless of the callable; skip the cache
        return _Operators(n, p)
    return _ops_cached(n, p)


@dataclass
class _Rhs:
    nh: np.ndarray
    bmax: float
    divmax: float
    linf: float


def _rhs_hat(uh: np.ndarray, p: ModelParams, ops: _Operators, dealias: bool) -> _Rhs:
    g = ops.grid
    uh_d = uh * ops.mask if dealias else uh
    u_d = g.irfft(uh_d)
    linf = float(np.max(np.abs(u_d)))
    nh = np.zeros_like(uh)
    bmax = divmax = 0.0
    if p.chi != 0.0:
        b1 = g.irfft(ops.m1 * uh_d)
        b2 = g.irfft(ops.m2 * uh_d)
        f1 = g.rfft(u_d * b1)
        f2 = g.rfft(u_d * b2)
        if dealias:
            f1 *= ops.mask
            f2 *= ops.mask
        nh += p.chi * (ops.d1 * f1 + ops.d2 * f2)
        bmax = float(max(np.max(np.abs(b1)), np.max(np.abs(b2))))
        if not ops.div_free:
            divmax = float(np.max(np.abs(g.irfft(ops.divm * uh_d))))
    if p.forcing == "logistic" and p.r != 0.0:
        sq = g.rfft(u_d * u_d)
        if dealias:
            sq *= ops.mask
        nh += p.r * (uh - sq)
    elif p.forcing == "riesz":
        nh += ops.riesz1 * uh
    return _Rhs(nh, bmax, divmax, linf)


def nonlinear_rhs(u: np.ndarray, p: ModelParams, dealias: bool = True) -> np.ndarray:
    """Explicit part ``chi div(u B(u)) + f(u)`` evaluated pseudo-spectrally."""
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    ops = _ops(g.n, p)
    return g.irfft(_rhs_hat(g.rfft(u), p, ops, dealias).nh)


def _cfl_from_norms(bmax, divmax, linf, p: ModelParams, cfg: StepperConfig, h: float) -> float:
    dt = cfg.dt_max
    floor = 1e-12
    if p.chi > 0:
        dt = min(dt, cfg.cfl_safety * h / max(p.chi * bmax, floor))
        # chi u div B acts as a reaction term of rate chi |div B|
        dt = min(dt, cfg.cfl_safety / max(p.chi * divmax, floor))
    if p.forcing == "logistic" and p.r > 0:
        dt = min(dt, 1.0 / (p.r * (1.0 + 2.0 * linf)))
    return dt


def cfl_dt(u: np.ndarray, p: ModelParams, cfg: StepperConfig) -> float:
    """Adaptive step size for the explicit terms.

    ``cfl_safety * h / (chi ||B||_inf)``, capped by ``cfl_safety / (chi ||div B||_inf)``,
    by ``1 / (r (1 + 2||u||_inf))`` for the logistic term, and by ``dt_max``.
    """
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    rhs = _rhs_hat(g.rfft(u), p, _ops(g.n, p), dealias=False)
    return _cfl_from_norms(rhs.bmax, rhs.divmax, float(np.max(np.abs(u))), p, cfg, g.h)


def _advance(uh, rhs: _Rhs, dt, prev, p: ModelParams, cfg: StepperConfig, ops: _Operators):
    lam = ops.lam
    nh = rhs.nh
    if cfg.scheme == "imex1_exp":
        z = dt * lam
        decay = np.exp(-z)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(z > 1e-12, -np.expm1(-z) / np.where(lam > 0, lam, 1.0), dt)
        return decay * uh + phi * nh
    if cfg.scheme == "imex2" and prev is not None:
        uh_old, nh_old, dt_old = prev
        w = dt / dt_old
        num = (1 + w) * uh - (w * w / (1 + w)) * uh_old + dt * ((1 + w) * nh - w * nh_old)
        return num / ((1 + 2 * w) / (1 + w) + dt * lam)
    return (uh + dt * nh) / (1.0 + dt * lam)


def step(state: State, p: ModelParams, cfg: StepperConfig, dt: Optional[float] = None) -> State:
    """Advance one step.  Raises :class:`Unstable` past the blowup cap."""
    u = np.asarray(state.u, dtype=float)
    g = grid_of(u)
    ops = _ops(g.n, p)
    uh = g.rfft(u)
    rhs = _rhs_hat(uh, p, ops, cfg.dealias)
    if dt is None:
        dt = cfg.dt if cfg.dt is not None else _cfl_from_norms(
            rhs.bmax, rhs.divmax, rhs.linf, p, cfg, g.h
        )
    new_uh = _advance(uh, rhs, dt, state.prev, p, cfg, ops)
    new_u = g.irfft(new_uh)
    if cfg.clamp_negative:
        new_u = np.maximum(new_u, 0.0)
    linf = float(np.max(np.abs(new_u)))
    if not np.isfinite(linf) or linf > BLOWUP_LINF:
        raise Unstable(f"||u||_inf = {linf:.3e} at t = {state.t + dt:.6g}", t=state.t + dt, linf=linf)
    return State(state.t + dt, new_u, prev=(uh, rhs.nh, dt))


def spectral_tail(u: np.ndarray) -> float:
    """Share of ``sum |u_hat|^2`` carried by modes with Euclidean ``|k| > n/3``."""
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    k1, k2 = g.half_k
    e = np.abs(g.rfft(u)) ** 2
    w = np.full(e.shape, 2.0)
    w[:, 0] = 1.0
    w[:, -1] = 1.0
    total = float(np.sum(w * e))
    if total == 0.0:
        return 0.0
    return float(np.sum((w * e)[np.hypot(k1, k2) > g.n / 3.0]) / total)


@dataclass
class Trajectory:
    """Output of :func:`run`.

    ``records`` holds :class:`~fracscalar.diagnostics.DiagnosticsRecord`
    objects; ``snapshots`` holds ``(t, u)`` pairs at record times when the
    run was asked to store fields.
    """

    params: ModelParams
    stepper: StepperConfig
    n: int
    T: float
    u0: np.ndarray
    state: State
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    steps: int = 0
    completed: bool = False
    unstable: bool = False
    resolution_limited: bool = False
    reason: str = ""
    linf_time_integral: float = 0.0
    min_u: float = math.inf
    wall_time: float = 0.0

    @property
    def t(self) -> float:
        return self.state.t

    @property
    def sup_linf(self) -> float:
        return max((rec.max_abs for rec in self.records), default=float(np.max(np.abs(self.u0))))

    @property
    def tail_max(self) -> float:
        return max((rec.spectral_tail for rec in self.records), default=0.0)


def run(
    u0: np.ndarray,
    p: ModelParams,
    cfg: StepperConfig,
    T: float,
    diag_every: int = 10,
    *,
    plan=None,
    mollify_eps: Optional[float] = None,
    store_fields: bool = False,
    checkpoint_every: Optional[int] = None,
    checkpoint_dir=None,
    stop_on_resolution_loss: bool = False,
    on_record: Optional[Callable] = None,
) -> Trajectory:
    """Integrate from ``u0`` to ``t = T``.

    Records are taken at ``t = 0``, every ``diag_every`` steps and at the
    final time.  An :class:`Unstable` event, a collapse of the adaptive step
    below ``dt_min`` or hitting ``max_steps`` ends the run early; the partial
    trajectory comes back with ``completed = False`` and a ``reason``.
    """
    from .diagnostics import RecordPlan, compute_record

    if not T > 0:
        raise ConfigError("T", f"T must be positive, got {T!r}")
    if diag_every < 1:
        raise ConfigError("diag_every", f"diag_every must be >= 1, got {diag_every!r}")
    u0 = np.array(u0, dtype=float, copy=True)
    g = grid_of(u0)
    if mollify_eps:
        u0 = heat_mollify(u0, mollify_eps)
    if plan is None:
        plan = RecordPlan.for_params(p, g.n)
    ops = _ops(g.n, p)

    traj = Trajectory(params=p, stepper=cfg, n=g.n, T=float(T), u0=u0.copy(), state=State(0.0, u0))
    started = time.perf_counter()
    warned = False

    n_fixed = None
    dt_fixed = None
    if cfg.dt is not None:
        n_fixed = max(1, math.ceil(T / cfg.dt - 1e-9))
        dt_fixed = T / n_fixed

    def take_record(u, t, steps, dt):
        rec = compute_record(u, p, plan, t=t, step=steps, dt=dt, linf_integral=traj.linf_time_integral)
        traj.records.append(rec)
        if store_fields:
            traj.snapshots.append((t, u.copy()))
        if rec.spectral_tail > TAIL_LIMIT:
            traj.resolution_limited = True
        if on_record is not None:
            on_record(rec, u)
        return rec

    def save_checkpoint(u, t, steps):
        from pathlib import Path

        from .checkpoint import write_checkpoint

        path = Path(checkpoint_dir) / f"step_{steps:08d}.frsc"
        write_checkpoint(path, u, t, p)

    u = u0
    uh = g.rfft(u)
    t = 0.0
    prev = None
    linf_prev = float(np.max(np.abs(u)))
    traj.min_u = float(np.min(u))
    take_record(u, 0.0, 0, 0.0)
    steps = 0
    dt = 0.0
    last_recorded = 0

    while True:
        if n_fixed is not None and steps >= n_fixed:
            break
        if n_fixed is None and t >= T * (1 - 1e-14):
            break
        if steps >= cfg.max_steps:
            traj.reason = f"max_steps={cfg.max_steps} reached at t={t:.6g}"
            break
        rhs = _rhs_hat(uh, p, ops, cfg.dealias)
        if dt_fixed is not None:
            dt = dt_fixed
        else:
            dt = _cfl_from_norms(rhs.bmax, rhs.divmax, rhs.linf, p, cfg, g.h)
            if dt < cfg.dt_min:
                traj.unstable = True
                traj.reason = f"adaptive dt {dt:.3e} fell below dt_min at t={t:.6g}"
                break
            if t + dt > T:
                dt = T - t
            elif t + 1.5 * dt > T:
                # split the remainder instead of leaving a sliver
                dt = 0.5 * (T - t)
        new_uh = _advance(uh, rhs, dt, prev, p, cfg, ops)
        u_new = g.irfft(new_uh)
        if cfg.clamp_negative:
            u_new = np.maximum(u_new, 0.0)
            new_uh = g.rfft(u_new)
        linf = float(np.max(np.abs(u_new)))
        if not np.isfinite(linf) or linf > BLOWUP_LINF:
            traj.unstable = True
            traj.reason = f"||u||_inf = {linf:.3e} at t = {t + dt:.6g}"
            break
        prev = (uh, rhs.nh, dt)
        uh = new_uh
        u = u_new
        t = T if (n_fixed is not None and steps + 1 == n_fixed) else t + dt
        steps += 1
        traj.linf_time_integral += 0.5 * dt * (linf_prev + linf)
        linf_prev = linf
        umin = float(np.min(u))
        traj.min_u = min(traj.min_u, umin)
        if umin < -1e-6 and not warned:
            log.warning("min(u) = %.3e < -1e-6 at t = %.6g", umin, t)
            warned = True
        at_end = (n_fixed is not None and steps == n_fixed) or (n_fixed is None and t >= T * (1 - 1e-14))
        if steps % diag_every == 0 or at_end:
            rec = take_record(u, t, steps, dt)
            last_recorded = steps
            if stop_on_resolution_loss and rec.spectral_tail > TAIL_LIMIT:
                traj.reason = f"spectral tail {rec.spectral_tail:.3e} exceeded {TAIL_LIMIT} at t={t:.6g}"
                break
        if checkpoint_every and checkpoint_dir is not None and steps % checkpoint_every == 0:
            save_checkpoint(u, t, steps)

    if steps != last_recorded:
        take_record(u, t, steps, dt)
    traj.state = State(t, u, prev=prev)
    traj.steps = steps
    traj.completed = not traj.unstable and abs(t - T) <= 1e-12 * max(1.0, T) and not traj.reason
    if traj.completed:
        traj.reason = "completed"
    traj.wall_time = time.perf_counter() - started
    return traj

