import numpy as np
import pytest

from qivif.config import Config
from qivif.quaternion import QuaternionMatrix
from qivif.samples import synthesize_pair


def random_matrix(rng, height, width, pure=False, scale=1.0) -> QuaternionMatrix:
    data = rng.standard_normal((4, height, width)) * scale
    if pure:
        data[0] = 0.0
    return QuaternionMatrix(data)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def quiet():
    settings = Config()
    previous = settings.verbose
    settings.verbose = False
    yield
    settings.verbose = previous


@pytest.fixture(scope="session")
def small_pair():
    return synthesize_pair(size=24, seed=3, name="small")
