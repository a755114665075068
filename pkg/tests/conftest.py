import numpy as np
import pytest

from gvfpath import (
    CassiniPath,
    CirclePath,
    EllipsePath,
    GvfParams,
    IdentityMap,
    LinePath,
)

# The two experiment paths share boundary caches across the whole session.


@pytest.fixture(scope="session")
def ellipse():
    return EllipsePath(x0=600.0, y0=350.0, R=400.0, p=1.0, q=0.5, k_s=1e-5)


@pytest.fixture(scope="session")
def cassini():
    return CassiniPath(x0=600.0, y0=350.0, p=330.0, q=300.0, k_s=1e-10)


@pytest.fixture(scope="session")
def line_y0():
    return LinePath(0.0, 1.0, 0.0)


@pytest.fixture(scope="session")
def unit_circle():
    return CirclePath(0.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def identity():
    return IdentityMap()


@pytest.fixture(scope="session")
def exp_params():
    return GvfParams(k_n=3.0, k_delta=2.0, u_r=50.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
