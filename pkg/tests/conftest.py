import pytest

from eewsim.demo import build_mmi_grid, build_population_grid
from eewsim.geo import GeoPoint
from eewsim.network import synth_catalog
from eewsim.scenario import Earthquake, VelocityModel


@pytest.fixture(scope="session")
def demo_pop():
    return build_population_grid()


@pytest.fixture(scope="session")
def demo_mmi():
    return build_mmi_grid()


@pytest.fixture(scope="session")
def demo_catalog(demo_pop):
    return synth_catalog(demo_pop, 6202, 20100112)


@pytest.fixture(scope="session")
def demo_quake():
    return Earthquake(
        epicenter=GeoPoint(18.457, -72.533), depth_km=10.0, magnitude=7.0
    )


@pytest.fixture(scope="session")
def vmodel():
    return VelocityModel()
