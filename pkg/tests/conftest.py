import numpy as np
import pytest

from convomeasure.surfaces import make_surface

SQRT3_PI = np.pi / np.sqrt(3.0)


@pytest.fixture
def flat1():
    return make_surface("zero", (), 1)


@pytest.fixture
def flat2():
    return make_surface("zero", (), 2)


@pytest.fixture
def quartic1():
    return make_surface("quartic", (), 1)


@pytest.fixture
def quartic2():
    return make_surface("quartic", (), 2)


@pytest.fixture
def hyperbola1():
    return make_surface("soft-hyperbola", (), 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
