import numpy as np
import pytest

from drrd.core import Dataset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_data(rng):
    """Zero-noise arms y = 2 + 3w (treated) and y = 1 + w (control), cutoff 0."""
    w = rng.uniform(-1, 1, 200)
    y = np.where(w >= 0, 2 + 3 * w, 1 + w)
    return Dataset(y, w)


@pytest.fixture
def indicator_data():
    """y_i = D_i exactly."""
    w = np.array([-0.9, -0.5, -0.2, -0.05, 0.0, 0.1, 0.4, 0.8])
    return Dataset((w >= 0).astype(float), w)
