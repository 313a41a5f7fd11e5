"""Run and sweep drivers behind the command line."""

from __future__ import annotations

import copy
import csv
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .checkpoint import write_checkpoint
from .config import SCHEMA_VERSION, RunConfig, _check_keys
from .diagnostics import RecordPlan, write_records_csv
from .errors import ConfigError, FracScalarError
from .evolution import Trajectory, run
from .monitors import alpha_smooth, alpha_weak, check_bounds

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSTABLE = 2

ALL_ALPHA = "all α>0"
SWEEP_AXES = ("alpha", "chi", "r", "mass")
SUMMARY_COLUMNS = (
    "point", "alpha", "chi", "r", "mass", "alpha_smooth", "alpha_weak", "sup_linf", "spectral_tail_max",
    "stable", "classification", "completed", "unstable", "resolution_limited", "t_final", "steps",
    "monitors", "error",
)


@dataclass
class RunOutcome:
    config: RunConfig
    trajectory: Trajectory
    monitors: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_UNSTABLE if self.trajectory.unstable else EXIT_OK

    def monitor(self, name: str):
        for m in self.monitors:
            if m.monitor == name:
                return m
        raise KeyError(name)


def execute(cfg: RunConfig, out_dir=None, *, write: bool = True, store_fields: bool = False) -> RunOutcome:
    """Run one configuration and (optionally) write its artifacts.

    Artifacts: ``diagnostics.csv`` (one row per record), ``monitors.json``
    (one entry per configured monitor) and ``final.frsc``.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    u0 = cfg.initial_field()
    plan = RecordPlan.for_params(cfg.params, cfg.n, cfg.s_max, with_wsp=cfg.record_wsp)
    traj = run(
        u0,
        cfg.params,
        cfg.stepper,
        cfg.T,
        cfg.diag_every,
        plan=plan,
        mollify_eps=cfg.mollify_eps,
        store_fields=store_fields,
        checkpoint_every=cfg.checkpoint_every if write else None,
        checkpoint_dir=out / "checkpoints" if write else None,
        stop_on_resolution_loss=cfg.stop_on_resolution_loss,
    )
    monitors = []
    if len(traj.records) >= 2 and cfg.monitors:
        monitors = check_bounds(traj, cfg.params, cfg.monitors, cfg.s_max)
    outcome = RunOutcome(cfg, traj, monitors)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        write_records_csv(out / "diagnostics.csv", traj.records)
        report = {
            "completed": traj.completed,
            "unstable": traj.unstable,
            "resolution_limited": traj.resolution_limited,
            "reason": traj.reason,
            "t_final": traj.t,
            "steps": traj.steps,
            "min_u": traj.min_u,
            "linf_time_integral": traj.linf_time_integral,
            "monitors": [m.to_dict() for m in monitors],
        }
        (out / "monitors.json").write_text(json.dumps(report, indent=2, default=float))
        write_checkpoint(out / "final.frsc", traj.state.u, traj.t, cfg.params)
    return outcome


def classify(traj: Trajectory) -> tuple[bool, str]:
    """Operational "bounded" rule: reached ``T``, ``sup ||u||_inf < 10 ||u0||_inf e^{rT}``, tail < 0.01."""
    if traj.unstable:
        return False, "unstable"
    if not traj.completed:
        if traj.resolution_limited:
            return False, "resolution-limited"
        return False, "incomplete"
    u0_inf = float(abs(traj.u0).max())
    cap = 10.0 * u0_inf * math.exp(traj.params.r * traj.T)
    if traj.tail_max >= 0.01:
        return False, "resolution-limited"
    if traj.sup_linf >= cap:
        return False, "growth"
    return True, "bounded"


@dataclass
class SweepSpec:
    base: dict
    axes: dict
    output_dir: str = "sweep_out"
    write_points: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        _check_keys(d, {"schema_version", "base", "axes", "output_dir", "write_points"}, "")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {d.get('schema_version')!r}")
        if not isinstance(d.get("base"), dict):
            raise ConfigError("base", "expected a run configuration object")
        axes = d.get("axes", {})
        _check_keys(axes, SWEEP_AXES, "axes")
        for key, vals in axes.items():
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"axes.{key}", "expected a non-empty list")
        spec = cls(
            base=d["base"],
            axes={k: axes[k] for k in SWEEP_AXES if k in axes},
            output_dir=str(d.get("output_dir", "sweep_out")),
            write_points=bool(d.get("write_points", True)),
        )
        for i, point in enumerate(spec.point_dicts()):
            try:
                RunConfig.from_dict(point)
            except ConfigError as exc:
                raise ConfigError(f"point[{i}].{exc.field}", str(exc).split(": ", 1)[-1]) from None
        return spec

    def point_dicts(self) -> list:
        keys = list(self.axes)
        out = []
        for combo in itertools.product(*(self.axes[k] for k in keys)):
            d = copy.deepcopy(self.base)
            d.setdefault("schema_version", SCHEMA_VERSION)
            for key, val in zip(keys, combo):
                if key == "mass":
                    d["initial_data"]["mass"] = val
                else:
                    d["params"][key] = val
            out.append(d)
        return out


def _pool_size(requested: Optional[int], n_points: int) -> int:
    jobs = requested or 1
    cap = os.environ.get("FRACSCALAR_THREADS")
    if cap:
        try:
            jobs = min(jobs, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, min(jobs, n_points))


def _run_point(args) -> dict:
    index, point, out_dir = args
    cfg = RunConfig.from_dict(point)
    p = cfg.params
    weak = alpha_weak(p.chi, p.r)
    row = {
        "point": index,
        "alpha": p.alpha,
        "chi": p.chi,
        "r": p.r,
        "mass": cfg.initial_data.get("mass", ""),
        "alpha_smooth": alpha_smooth(p.chi, p.r),
        "alpha_weak": ALL_ALPHA if weak is None else weak,
        "error": "",
    }
    try:
        target = Path(out_dir) / f"point_{index:03d}" if out_dir is not None else None
        outcome = execute(cfg, target, write=target is not None)
    except FracScalarError as exc:
        row.update(stable=False, classification="error", error=f"{type(exc).__name__}: {exc}")
        return row
    traj = outcome.trajectory
    stable, label = classify(traj)
    row.update(
        sup_linf=traj.sup_linf,
        spectral_tail_max=traj.tail_max,
        stable=stable,
        classification=label,
        completed=traj.completed,
        unstable=traj.unstable,
        resolution_limited=traj.resolution_limited,
        t_final=traj.t,
        steps=traj.steps,
        monitors=";".join(f"{m.monitor}={m.status}" for m in outcome.monitors),
    )
    return row


def run_sweep(spec: SweepSpec, jobs: Optional[int] = None, out_dir=None) -> list:
    """Run every sweep point and write ``sweep_summary.csv``; rows come back in point order."""
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    points = spec.point_dicts()
    point_dir = out / "points" if spec.write_points else None
    tasks = [(i, pt, point_dir) for i, pt in enumerate(points)]
    workers = _pool_size(jobs, len(tasks))
    if workers == 1:
        rows = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, tasks))
    write_summary(out / "sweep_summary.csv", rows)
    return rows


def write_summary(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
