import numpy as np
import pytest

from omcert.core import Grid


@pytest.fixture
def grid_1d():
    return Grid.symmetric(1, radius=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
