import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from foliation_lab.scenario import load_config

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CACHE = {}


def builtin(name):
    if name not in _CACHE:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _CACHE[name] = load_config(f"builtin:{name}")
    return _CACHE[name]


@pytest.fixture(scope="session")
def quarter():
    return builtin("circle_quarter").scenario


@pytest.fixture(scope="session")
def third():
    return builtin("circle_third").scenario


@pytest.fixture(scope="session")
def flat():
    return builtin("flat_circle").scenario


@pytest.fixture(scope="session")
def so3_circle():
    return builtin("so3_circle").scenario


@pytest.fixture(scope="session")
def charts_scenario():
    return builtin("mapping_torus_charts").scenario
