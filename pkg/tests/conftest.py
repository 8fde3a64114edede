import numpy as np
import pytest

from kpzlab.grid import SpaceGrid, TimeGrid
from kpzlab.mollifier import mollifier_new


@pytest.fixture(scope="session")
def grid256():
    return SpaceGrid(16.0, 256)


@pytest.fixture(scope="session")
def grid512():
    return SpaceGrid(16.0, 512)


@pytest.fixture(scope="session")
def tgrid100():
    return TimeGrid(1.0, 100)


@pytest.fixture(scope="session")
def moll1():
    return mollifier_new(1)


@pytest.fixture(scope="session")
def moll2():
    return mollifier_new(2)


@pytest.fixture()
def rng_np():
    return np.random.default_rng(20240811)
