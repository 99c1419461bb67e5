import functools

import pytest
from hypothesis import settings

from blowup_lab.fixtures import get_fixture
from blowup_lab.kernel import build_grid
from blowup_lab.problem import estimate_lambda, extract_radial_bounds

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

CLASSIFY_R = 2.0**14
CLASSIFY_NODES = 4096


@functools.lru_cache(maxsize=None)
def fixture_bounds(tag, r_max=CLASSIFY_R, nodes=CLASSIFY_NODES, grading=2.0, **params):
    fx = get_fixture(tag, **params)
    lam = estimate_lambda(fx.nonlinearity)
    return fx, extract_radial_bounds(fx.potential, build_grid(r_max, nodes, grading), lam)


@pytest.fixture
def bounds_for():
    return fixture_bounds
