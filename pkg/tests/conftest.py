import numpy as np
import pytest

from retropath import CalibrationTargets, calibrate, solve_steady_state


@pytest.fixture(scope="session")
def targets():
    return CalibrationTargets()


@pytest.fixture(scope="session")
def calibrated(targets):
    return calibrate(targets)


@pytest.fixture(scope="session")
def steady(calibrated):
    return solve_steady_state(calibrated)


def central_diff(f, x, step=1e-6):
    """Central finite difference with relative step."""
    h = step * max(abs(x), 1.0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


@pytest.fixture(scope="session")
def fd():
    return central_diff


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
