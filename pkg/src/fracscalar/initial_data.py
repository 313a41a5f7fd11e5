"""Non-negative initial data on the torus grid."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .grid import AREA, TorusGrid, get_grid, integrate

KINDS = ("constant", "cosine_bump", "periodized_gaussian", "random_smooth")


def constant(grid: TorusGrid, value: float) -> np.ndarray:
    if value < 0:
        raise ConfigError("initial_data.value", f"constant data must be >= 0, got {value!r}")
    return np.full((grid.n, grid.n), float(value))


def cosine_bump(grid: TorusGrid, base: float = 1.0, terms: Sequence = ((0.9, 1, 1),)) -> np.ndarray:
    """``base + sum amp * cos(k1 x1) cos(k2 x2)`` over ``terms = [(amp, k1, k2), ...]``."""
    amps = sum(abs(float(t[0])) for t in terms)
    if base < amps:
        raise ConfigError("initial_data.base", f"base {base} < sum |amp| = {amps}; data could go negative")
    X1, X2 = grid.mesh
    u = np.full(X1.shape, float(base))
    for amp, k1, k2 in terms:
        u += float(amp) * np.cos(int(k1) * X1) * np.cos(int(k2) * X2)
    return u


def periodized_gaussian(
    grid: TorusGrid, mass: float, width: float, center: Sequence[float] = (0.0, 0.0), images: Optional[int] = None
) -> np.ndarray:
    """Theta-function sum of Gaussians of standard deviation ``width``, scaled to ``mass``."""
    if not mass > 0:
        raise ConfigError("initial_data.mass", f"mass must be positive, got {mass!r}")
    if not width > 0:
        raise ConfigError("initial_data.width", f"width must be positive, got {width!r}")
    if images is None:
        images = 1 + int(math.ceil(8.0 * width / (2.0 * math.pi)))
    X1, X2 = grid.mesh
    u = np.zeros_like(X1)
    for a in range(-images, images + 1):
        d1 = X1 - center[0] + 2.0 * math.pi * a
        for b in range(-images, images + 1):
            d2 = X2 - center[1] + 2.0 * math.pi * b
            u += np.exp(-(d1 * d1 + d2 * d2) / (2.0 * width * width))
    return u * (mass / integrate(u))


def _random_modes(seed: int, decay: float, kmax: int):
    rng = np.random.default_rng(seed)
    modes = []
    # half-plane enumeration in a fixed order so fields agree across grid sizes
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            amp = math.exp(-decay * math.hypot(k1, k2))
            a, b = rng.standard_normal(2)
            modes.append((k1, k2, amp * a, amp * b))
    return modes


def random_smooth(
    grid: TorusGrid,
    seed: int,
    decay: float = 1.0,
    amplitude: float = 1.0,
    mass: Optional[float] = None,
    kmax: int = 8,
    positivity: str = "exp",
    shift: float = 0.1,
) -> np.ndarray:
    """Seeded smooth field with ``|u_hat(k)| ~ exp(-decay |k|)``.

    A random trigonometric polynomial ``g`` (modes ``|k|_inf <= kmax``) is
    scaled so that its coefficient bound ``sum |c_k|`` equals ``amplitude``
    (hence ``|g| <= amplitude``; the scale does not depend on the grid) and
    made positive, either by
    ``positivity="exp"`` (``u = exp(g)``) or ``"shift"``
    (``u = g + amplitude + shift``, again a bound rather than a grid minimum).  With ``mass`` the result is rescaled to
    that integral.  The same seed gives the same function on every grid.
    """
    if seed is None:
        raise ConfigError("initial_data.seed", "random_smooth requires an explicit seed")
    if positivity not in ("exp", "shift"):
        raise ConfigError("initial_data.positivity", f"expected 'exp' or 'shift', got {positivity!r}")
    X1, X2 = grid.mesh
    gfield = np.zeros_like(X1)
    bound = 0.0
    for k1, k2, a, b in _random_modes(int(seed), float(decay), int(kmax)):
        phase = k1 * X1 + k2 * X2
        gfield += a * np.cos(phase) + b * np.sin(phase)
        bound += math.hypot(a, b)
    if bound > 0:
        gfield *= amplitude / bound
    if positivity == "exp":
        u = np.exp(gfield)
    else:
        u = gfield + amplitude + shift
    if mass is not None:
        if not mass > 0:
            raise ConfigError("initial_data.mass", f"mass must be positive, got {mass!r}")
        u *= mass / integrate(u)
    return u


def make_initial_data(spec: dict, grid) -> np.ndarray:
    """Build ``u0`` from a tagged spec such as ``{"kind": "constant", "value": 2}``."""
    if isinstance(grid, int):
        grid = get_grid(grid)
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "constant":
            if "mass" in spec:
                return constant(grid, float(spec["mass"]) / AREA)
            return constant(grid, float(spec.get("value", 1.0)))
        if kind == "cosine_bump":
            terms = [tuple(t) if not isinstance(t, dict) else (t["amp"], *t["k"]) for t in spec.get("terms", [(0.9, 1, 1)])]
            return cosine_bump(grid, float(spec.get("base", 1.0)), terms)
        if kind == "periodized_gaussian":
            return periodized_gaussian(
                grid, float(spec["mass"]), float(spec.get("width", 0.5)), tuple(spec.get("center", (0.0, 0.0)))
            )
        if kind == "random_smooth":
            if "seed" not in spec:
                raise ConfigError("initial_data.seed", "random_smooth requires an explicit seed")
            return random_smooth(grid, **spec)
    except KeyError as exc:
        raise ConfigError(f"initial_data.{exc.args[0]}", "missing required entry") from None
    except TypeError as exc:
        raise ConfigError("initial_data", str(exc)) from None
    raise ConfigError("initial_data.kind", f"unknown kind {kind!r}; expected one of {KINDS}")
