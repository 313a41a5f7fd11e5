import csv
import json
import math

import numpy as np
import pytest

from fracscalar.checkpoint import read_checkpoint
from fracscalar.config import RunConfig
from fracscalar.errors import ConfigError
from fracscalar.experiments import (
    ALL_ALPHA,
    EXIT_OK,
    EXIT_UNSTABLE,
    SweepSpec,
    _pool_size,
    classify,
    execute,
    run_sweep,
)
from fracscalar.monitors import MONITORS


def run_dict(**over):
    d = {
        "schema_version": 1,
        "n": 16,
        "T": 0.3,
        "params": {"alpha": 1.5, "chi": 1.0, "r": 0.25},
        "initial_data": {"kind": "periodized_gaussian", "mass": 10, "width": 1.0},
        "record_wsp": False,
    }
    d.update(over)
    return d


class TestExecute:
    def test_logistic_constant(self, tmp_path):
        cfg = RunConfig.from_dict(run_dict(T=math.log(2), params={"alpha": 1.0, "r": 1.0},
                                           stepper={"dt": 1e-3}, initial_data={"kind": "constant", "value": 2}))
        out = execute(cfg, tmp_path)
        assert out.exit_code == EXIT_OK
        assert abs(out.trajectory.state.u.max() - 4 / 3) <= 5e-4
        for name in ("diagnostics.csv", "monitors.json", "final.frsc"):
            assert (tmp_path / name).exists()
        report = json.loads((tmp_path / "monitors.json").read_text())
        assert [m["monitor"] for m in report["monitors"]] == list(MONITORS)
        assert report["completed"]
        ck = read_checkpoint(tmp_path / "final.frsc")
        np.testing.assert_array_equal(ck.u, out.trajectory.state.u)

    def test_unit_mass_aee1(self, tmp_path):
        cfg = RunConfig.from_dict(run_dict(initial_data={"kind": "constant", "mass": 4 * math.pi**2}))
        out = execute(cfg, tmp_path)
        assert out.monitor("aee1").status == "green"

    def test_monitor_subset(self, tmp_path):
        cfg = RunConfig.from_dict(run_dict(monitors=["aee1", "sv"]))
        out = execute(cfg, tmp_path)
        report = json.loads((tmp_path / "monitors.json").read_text())
        assert [m["monitor"] for m in report["monitors"]] == ["aee1", "sv"]
        with pytest.raises(KeyError):
            out.monitor("aee2")

    def test_unstable_exit(self, tmp_path):
        cfg = RunConfig.from_dict(run_dict(
            params={"alpha": 1.0, "chi": 0.0, "r": 1.0}, stepper={"dt": 1.0}, T=50.0,
            initial_data={"kind": "constant", "value": 1e7}, monitors=["aee1"]))
        out = execute(cfg, tmp_path)
        assert out.exit_code == EXIT_UNSTABLE
        assert classify(out.trajectory) == (False, "unstable")

    def test_checkpoints(self, tmp_path):
        cfg = RunConfig.from_dict(run_dict(stepper={"dt": 0.1}, checkpoint_every=1))
        execute(cfg, tmp_path)
        assert len(list((tmp_path / "checkpoints").glob("*.frsc"))) >= 3


def sweep_dict(**axes):
    return {"schema_version": 1, "base": run_dict(), "axes": axes, "write_points": False}


class TestSweep:
    def test_points(self):
        spec = SweepSpec.from_dict(sweep_dict(alpha=[1.6, 2.0], r=[0.25, 0.6]))
        pts = spec.point_dicts()
        assert len(pts) == 4
        assert [(p["params"]["alpha"], p["params"]["r"]) for p in pts] == [
            (1.6, 0.25), (1.6, 0.6), (2.0, 0.25), (2.0, 0.6)]

    def test_invalid_point_named(self):
        with pytest.raises(ConfigError) as info:
            SweepSpec.from_dict(sweep_dict(alpha=[1.0, 3.0]))
        assert info.value.field == "point[1].params.alpha"

    def test_bad_axes(self):
        with pytest.raises(ConfigError):
            SweepSpec.from_dict(sweep_dict(beta=[1.0]))
        with pytest.raises(ConfigError):
            SweepSpec.from_dict(sweep_dict(alpha=[]))

    def test_summary_columns_and_thresholds(self, tmp_path):
        spec = SweepSpec.from_dict(sweep_dict(r=[0.25, 0.6], mass=[5.0]))
        rows = run_sweep(spec, jobs=1, out_dir=tmp_path)
        assert rows[0]["alpha_smooth"] == pytest.approx(1.5)
        assert rows[0]["alpha_weak"] == pytest.approx(0.95238, abs=1e-5)
        assert rows[1]["alpha_weak"] == ALL_ALPHA
        with (tmp_path / "sweep_summary.csv").open() as fh:
            table = list(csv.DictReader(fh))
        assert len(table) == 2 and table[1]["alpha_weak"] == ALL_ALPHA
        assert table[0]["classification"] == "bounded"
        for key in ("alpha", "chi", "r", "alpha_smooth", "alpha_weak", "sup_linf", "spectral_tail_max", "stable", "monitors"):
            assert key in table[0]

    def test_deterministic_and_parallel(self, tmp_path):
        spec = SweepSpec.from_dict(sweep_dict(alpha=[1.6, 2.0]))
        run_sweep(spec, jobs=1, out_dir=tmp_path / "a")
        run_sweep(spec, jobs=2, out_dir=tmp_path / "b")
        assert (tmp_path / "a" / "sweep_summary.csv").read_text() == (tmp_path / "b" / "sweep_summary.csv").read_text()

    def test_failure_recorded(self, tmp_path):
        # mass too large for the grid: the point fails on its own, the sweep carries on
        d = sweep_dict(alpha=[0.3, 2.0])
        d["base"] = run_dict(n=16, T=5.0, initial_data={"kind": "periodized_gaussian", "mass": 400, "width": 0.3},
                             stepper={"max_steps": 200}, monitors=["aee1"])
        rows = run_sweep(SweepSpec.from_dict(d), out_dir=tmp_path)
        assert len(rows) == 2
        assert rows[0]["stable"] is False
        assert rows[0]["classification"] in ("resolution-limited", "unstable", "incomplete", "growth")

    def test_pool_size_cap(self, monkeypatch):
        monkeypatch.setenv("FRACSCALAR_THREADS", "2")
        assert _pool_size(8, 10) == 2
        assert _pool_size(8, 1) == 1
        monkeypatch.delenv("FRACSCALAR_THREADS")
        assert _pool_size(None, 5) == 1
