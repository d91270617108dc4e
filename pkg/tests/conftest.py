import pytest

from plcclone.metrics import builtin_metric
from plcclone.samples import CORE_SAMPLES, load_sample


@pytest.fixture(scope="session")
def fine_metric():
    return builtin_metric("fine")


@pytest.fixture(scope="session")
def coarse_metric():
    return builtin_metric("coarse")


@pytest.fixture(scope="session")
def samples():
    return {name: load_sample(name)[0] for name in CORE_SAMPLES + ("pump_station",)}


@pytest.fixture(scope="session")
def basic_project(samples):
    return samples["example_basic"]


@pytest.fixture(scope="session")
def sfc_project(samples):
    return samples["conveyor_sfc"]


@pytest.fixture(scope="session")
def graphical_project(samples):
    return samples["logic_graphical"]
