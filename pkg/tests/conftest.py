import pytest

from gearsim.model import GearConfig, derive_geometry


@pytest.fixture(scope="session")
def cfg22():
    return GearConfig(2, 2, V0=10.0)


@pytest.fixture(scope="session")
def cfg42():
    return GearConfig(4, 2, V0=10.0)


@pytest.fixture(scope="session")
def geom22(cfg22):
    return derive_geometry(cfg22)


@pytest.fixture(scope="session")
def geom42(cfg42):
    return derive_geometry(cfg42)
