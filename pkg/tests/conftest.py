import numpy as np
import pytest

from sgm_semiconvex.experiments import benchmark_potential


@pytest.fixture(scope="session")
def mix():
    return benchmark_potential()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
