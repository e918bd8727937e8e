import numpy as np
import pytest

from corrsched import fixtures


@pytest.fixture(scope="session")
def two_sensor():
    spec = fixtures.two_sensor_spec()
    return spec, fixtures.two_sensor_strategies(spec)


@pytest.fixture(scope="session")
def three_sensor():
    spec = fixtures.three_sensor_spec()
    return spec, fixtures.three_sensor_strategies(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
