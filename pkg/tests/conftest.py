import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from threedvar.dynamics import CLASSICAL, solve, spin_up

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def v0():
    """A point on the attractor (default spin-up)."""
    return spin_up()


@pytest.fixture(scope="session")
def short_truth(v0):
    return solve(v0, 2.0, 1e-4, CLASSICAL)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
