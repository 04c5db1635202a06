"""Shared fixtures.

The symbolic ramp derivatives are lambdified once per process (lru_cache),
so the session-scoped fixtures below pay that cost a single time.
"""

from fractions import Fraction

import numpy as np
import pytest

from qhm.lattice import Params, make_grid
from qhm.projection import build_R


DEFAULT = Params.from_steps(1, Fraction(1, 4), Fraction(1, 4))


@pytest.fixture(scope="session")
def params():
    return DEFAULT


@pytest.fixture(scope="session")
def grid2(params):
    return make_grid(params, 2)


@pytest.fixture(scope="session")
def grid4(params):
    return make_grid(params, 4)


@pytest.fixture(scope="session")
def grid8(params):
    return make_grid(params, 8)


@pytest.fixture(scope="session")
def grid9(params):
    return make_grid(params, 9)


@pytest.fixture(scope="session")
def R2(params, grid2):
    return build_R(params, grid2)


@pytest.fixture(scope="session")
def R4(params, grid4):
    return build_R(params, grid4)


@pytest.fixture(scope="session")
def R9(params, grid9):
    return build_R(params, grid9)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
