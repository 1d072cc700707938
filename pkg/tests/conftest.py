import numpy as np
import pytest
from hypothesis import settings

from dmsolve import GaussianParams, GridSpec, gaussian_field, uniform01
from dmsolve.verify import random_smooth_field

settings.register_profile("dms", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("dms")


@pytest.fixture(scope="session")
def grid():
    return GridSpec(1024, 40.0)


@pytest.fixture(scope="session")
def mu():
    return uniform01(64)


@pytest.fixture(scope="session")
def gauss2(grid):
    """Unit-power Gaussian with sigma0 = 2."""
    return gaussian_field(GaussianParams(1.0, 2.0), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def smooth_field(grid, seed, **kw):
    return random_smooth_field(grid, np.random.default_rng(seed), **kw)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
