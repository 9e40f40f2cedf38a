import numpy as np
import pytest

from moyal import DampingSchedule


@pytest.fixture(scope="session")
def default_schedule():
    return DampingSchedule.default()


@pytest.fixture(scope="session")
def fine_schedule():
    """Finer damping for level-resolved symbol work (bias ~1e-7 up to n ~ 10)."""
    return DampingSchedule((0.08, 0.04, 0.02, 0.01), 3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240101)
