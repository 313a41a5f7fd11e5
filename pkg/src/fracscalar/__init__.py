"""Pseudo-spectral simulator for fractional Keller-Segel type active scalars on the 2-torus."""

from .drift import DriftSpec, check_screened_positivity, div_drift, eval_drift
from .errors import (
    ConfigError,
    FracScalarError,
    GridTooLarge,
    HypothesisNotMet,
    MeanNotZero,
    NegativeInput,
    SymmetryViolation,
    TruncationTooSmall,
    Unstable,
)
from .evolution import ModelParams, State, StepperConfig, Trajectory, run, step
from .grid import TorusGrid, forward_transform, get_grid, integrate, inverse_transform
from .operators import lambda_pow, riesz

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DriftSpec",
    "FracScalarError",
    "GridTooLarge",
    "HypothesisNotMet",
    "MeanNotZero",
    "ModelParams",
    "NegativeInput",
    "State",
    "StepperConfig",
    "SymmetryViolation",
    "TorusGrid",
    "Trajectory",
    "TruncationTooSmall",
    "Unstable",
    "check_screened_positivity",
    "div_drift",
    "eval_drift",
    "forward_transform",
    "get_grid",
    "integrate",
    "inverse_transform",
    "lambda_pow",
    "riesz",
    "run",
    "step",
]
