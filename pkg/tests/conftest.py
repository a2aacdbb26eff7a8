import numpy as np
import pytest

from decoc import builtin_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def bottleneck():
    return builtin_scenario("bottleneck")


@pytest.fixture(scope="session")
def merge_in():
    return builtin_scenario("merge-in")
