import numpy as np
import pytest

from ymflow.lie import get_algebra


@pytest.fixture(scope="session")
def su2():
    return get_algebra("su2")


@pytest.fixture(scope="session")
def su3():
    return get_algebra("su3")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
