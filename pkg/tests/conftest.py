import numpy as np
import pytest

from fracscalar.grid import get_grid
from fracscalar.initial_data import random_smooth
from fracscalar.verify import random_band_limited


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[16, 32])
def n(request):
    return request.param


def band_limited(n, seed=0, kmax=None, mean_zero=False):
    rng = np.random.default_rng(seed)
    return random_band_limited(n, kmax if kmax is not None else n // 3 - 1, rng, mean_zero)


def positive_field(n, seed, amplitude=2.0, decay=0.7, mass=None):
    return random_smooth(get_grid(n), seed=seed, amplitude=amplitude, decay=decay, mass=mass)


def mesh(n):
    return get_grid(n).mesh


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
