"""Command line: ``fracscalar run|sweep|verify-ops|diag``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .checkpoint import read_checkpoint
from .config import load_json, load_run_config
from .diagnostics import RecordPlan, compute_record, critical_p0, sv_gap
from .drift import KS_DRIFTS, check_screened_positivity, div_drift
from .errors import ConfigError, FracScalarError
from .experiments import EXIT_CONFIG, EXIT_OK, SweepSpec, execute, run_sweep
from .monitors import max_principle_probe
from .verify import verify_ops

DIAG_MONITORS = ("record", "sv", "divB", "screened", "maxp")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default)


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    outcome = execute(cfg, args.out)
    traj = outcome.trajectory
    print(f"{traj.reason}: t={traj.t:.6g} steps={traj.steps} max_u={traj.state.u.max():.10g}")
    for m in outcome.monitors:
        print(f"  {m.monitor:8s} {m.status}")
    return outcome.exit_code


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_dict(load_json(args.sweep))
    rows = run_sweep(spec, jobs=args.jobs, out_dir=args.out)
    for row in rows:
        print(f"point {row['point']}: alpha={row['alpha']} chi={row['chi']} r={row['r']} -> {row['classification']}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = verify_ops(n=args.n, alphas=tuple(args.alpha), K=args.K, singular=args.singular,
                        samples=args.samples)
    print(_dump(report))
    return EXIT_OK if report["ok"] else 3


def diagnose(
    u: np.ndarray, params, monitors: Sequence[str] = DIAG_MONITORS, p0: Optional[float] = None, t: float = 0.0
) -> dict:
    """Single-field diagnostics for a checkpointed state."""
    out = {}
    if "record" in monitors or "sv" in monitors:
        rec = compute_record(u, params, RecordPlan.for_params(params, u.shape[0], with_wsp=u.shape[0] <= 64), t=t)
        row = rec.to_row()
        if "record" in monitors:
            out["record"] = row
        if "sv" in monitors:
            out["sv"] = {
                str(s): {"lhs": rec.sv_lhs[s], "rhs": rec.sv_rhs[s], "unresolved": rec.sv_tail[s],
                         "ok": sv_gap(rec.sv_lhs[s], rec.sv_rhs[s], rec.sv_tail[s]) <= 0}
                for s in rec.sv_lhs
            }
    if "divB" in monitors:
        if params.drift.variant in KS_DRIFTS:
            margin = float(np.max(div_drift(u, params.drift) - u))
            out["divB"] = {"max_divB_minus_u": margin, "ok": margin <= 1e-8}
        else:
            out["divB"] = {"skipped": f"drift {params.drift.variant} has no div B <= u structure"}
    if "screened" in monitors:
        sp = check_screened_positivity(u, params.beta)
        out["screened"] = {"min_v": sp.min_v, "ok": sp.ok, "tol": sp.tol}
    if "maxp" in monitors:
        if p0 is None:
            p0 = critical_p0(params.chi, params.r)
        if p0 is None or not 1.0 < p0 < 2.0:
            out["maxp"] = {"skipped": f"p0={p0} outside (1, 2); pass --p0"}
        else:
            rep = max_principle_probe(u, params.alpha, p0)
            out["maxp"] = dict(rep.__dict__, p0=p0)
    return out


def _cmd_diag(args) -> int:
    ck = read_checkpoint(args.checkpoint)
    monitors = [m.strip() for m in args.monitors.split(",") if m.strip()]
    bad = [m for m in monitors if m not in DIAG_MONITORS]
    if bad:
        raise ConfigError("monitors", f"unknown diag monitor {bad[0]!r}; available: {list(DIAG_MONITORS)}")
    report = {"t": ck.t, "n": int(ck.u.shape[0]), "params": ck.params.to_dict()}
    report.update(diagnose(ck.u, ck.params, monitors, args.p0, ck.t))
    print(_dump(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracscalar", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="override output_dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("sweep")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify-ops", help="kernel quadrature vs multipliers, plus operator identities")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    p.add_argument("--singular", choices=("cell", "lattice"), default="cell")
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("diag", help="diagnostics of a checkpoint, printed as JSON")
    p.add_argument("checkpoint")
    p.add_argument("--monitors", default=",".join(DIAG_MONITORS))
    p.add_argument("--p0", type=float, default=None)
    p.set_defaults(func=_cmd_diag)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FracScalarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
