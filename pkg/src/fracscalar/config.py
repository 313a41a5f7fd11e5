"""JSON run configuration.

Example::

    {
      "schema_version": 1,
      "n": 64,
      "T": 5.0,
      "params": {"alpha": 1.5, "chi": 1.0, "r": 1.0, "eps_viscosity": 0.0,
                 "drift": {"drift": "ks_poisson"}, "forcing": "logistic"},
      "stepper": {"scheme": "imex1", "dt": null, "cfl_safety": 0.5},
      "initial_data": {"kind": "cosine_bump", "base": 1.0, "terms": [[0.9, 1, 1]]},
      "mollify_eps": null,
      "diag_every": 10,
      "output_dir": "out",
      "monitors": ["aee1", "aee3"]
    }

Unknown keys are rejected so that typos surface as errors naming the field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .drift import DriftSpec
from .errors import ConfigError
from .evolution import ModelParams, StepperConfig
from .initial_data import make_initial_data
from .monitors import MONITORS

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version", "n", "T", "params", "stepper", "initial_data", "mollify_eps", "diag_every",
    "output_dir", "monitors", "checkpoint_every", "s_max", "stop_on_resolution_loss", "record_wsp",
}


def _check_keys(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(where or "config", f"expected a JSON object, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        prefix = f"{where}." if where else ""
        raise ConfigError(prefix + extra[0], "unknown entry")


def _number(d: dict, key: str, where: str, default=None, kind=float):
    if key not in d or d[key] is None:
        if default is ...:
            raise ConfigError(f"{where}{key}", "missing required entry")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}{key}", f"expected a number, got {val!r}")
    if kind is int and int(val) != val:
        raise ConfigError(f"{where}{key}", f"expected an integer, got {val!r}")
    return kind(val)


def parse_params(d: dict) -> ModelParams:
    allowed = {"alpha", "beta", "chi", "r", "eps_viscosity", "drift", "forcing"}
    _check_keys(d, allowed, "params")
    drift_d = d.get("drift", {"drift": "ks_poisson"})
    if isinstance(drift_d, str):
        drift_d = {"drift": drift_d}
    drift_d = dict(drift_d)
    if "beta" in d and "beta" not in drift_d and drift_d.get("drift") == "ks_screened":
        drift_d["beta"] = d["beta"]
    try:
        drift = DriftSpec.from_dict(drift_d)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError("params.drift", str(exc)) from None
    try:
        return ModelParams(
            alpha=_number(d, "alpha", "params.", ...),
            chi=_number(d, "chi", "params.", 1.0),
            r=_number(d, "r", "params.", 0.0),
            eps_viscosity=_number(d, "eps_viscosity", "params.", 0.0),
            drift=drift,
            forcing=d.get("forcing", "logistic"),
        )
    except ConfigError as exc:
        if exc.field.startswith("params."):
            raise
        raise ConfigError(f"params.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def parse_stepper(d: Optional[dict]) -> StepperConfig:
    d = d or {}
    names = {f.name for f in fields(StepperConfig)}
    _check_keys(d, names, "stepper")
    try:
        return StepperConfig(**d)
    except ConfigError as exc:
        raise ConfigError(f"stepper.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except TypeError as exc:
        raise ConfigError("stepper", str(exc)) from None


@dataclass
class RunConfig:
    n: int
    T: float
    params: ModelParams
    stepper: StepperConfig
    initial_data: dict
    mollify_eps: Optional[float] = None
    diag_every: int = 10
    output_dir: str = "out"
    monitors: tuple = MONITORS
    checkpoint_every: Optional[int] = None
    s_max: float = 3.0
    stop_on_resolution_loss: bool = False
    record_wsp: bool = True
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _check_keys(d, _TOP_KEYS, "")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
        n = _number(d, "n", "", ..., int)
        if n < 8 or n % 2:
            raise ConfigError("n", f"grid size must be an even integer >= 8, got {n}")
        T = _number(d, "T", "", ...)
        if not T > 0:
            raise ConfigError("T", f"T must be positive, got {T!r}")
        if "params" not in d:
            raise ConfigError("params", "missing required entry")
        params = parse_params(d["params"])
        stepper = parse_stepper(d.get("stepper"))
        init = d.get("initial_data")
        if not isinstance(init, dict) or "kind" not in init:
            raise ConfigError("initial_data", "expected an object with a 'kind' entry")
        mollify = d.get("mollify_eps")
        if mollify == "auto":
            mollify = (2 * math.pi / n) ** 2
        elif mollify is not None:
            mollify = _number(d, "mollify_eps", "")
            if mollify < 0:
                raise ConfigError("mollify_eps", f"must be >= 0, got {mollify!r}")
        diag_every = _number(d, "diag_every", "", 10, int)
        if diag_every < 1:
            raise ConfigError("diag_every", f"must be >= 1, got {diag_every}")
        monitors = tuple(d.get("monitors", MONITORS))
        bad = [m for m in monitors if m not in MONITORS]
        if bad:
            raise ConfigError("monitors", f"unknown monitor {bad[0]!r}; available: {list(MONITORS)}")
        cfg = cls(
            n=n,
            T=T,
            params=params,
            stepper=stepper,
            initial_data=dict(init),
            mollify_eps=mollify,
            diag_every=diag_every,
            output_dir=str(d.get("output_dir", "out")),
            monitors=monitors,
            checkpoint_every=_number(d, "checkpoint_every", "", None, int),
            s_max=_number(d, "s_max", "", 3.0),
            stop_on_resolution_loss=bool(d.get("stop_on_resolution_loss", False)),
            record_wsp=bool(d.get("record_wsp", True)),
            raw=dict(d),
        )
        cfg.initial_field()  # validate the data spec eagerly
        return cfg

    def initial_field(self):
        u0 = make_initial_data(self.initial_data, self.n)
        if float(u0.min()) < 0:
            raise ConfigError("initial_data", "initial data must be non-negative")
        return u0


def load_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("path", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("json", f"{path}: {exc}") from None


def load_run_config(path) -> RunConfig:
    return RunConfig.from_dict(load_json(path))
