import numpy as np
import pytest

from twistwave.fiber import build_grid
from twistwave.geometry import Disk, Ellipse, Rectangle

SQUARE = Rectangle(0.5, 0.5)


@pytest.fixture(scope="session")
def square():
    return SQUARE


@pytest.fixture(scope="session")
def square_grid():
    return build_grid(SQUARE, 0.05)


@pytest.fixture(scope="session")
def disk_grid():
    return build_grid(Disk(1.0), 0.1)


@pytest.fixture(scope="session")
def ellipse_grid():
    return build_grid(Ellipse(1.5, 1.0), 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
