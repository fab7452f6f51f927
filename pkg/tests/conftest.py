import pytest

from riskmap.catalog import default_catalog
from riskmap.risk import WeightConfig


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def weights():
    return WeightConfig.default()


@pytest.fixture(scope="session")
def world(tmp_path_factory):
    from worldgen import build_world

    return build_world(tmp_path_factory.mktemp("world"))
