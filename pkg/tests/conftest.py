import pytest
from hypothesis import HealthCheck, settings

from zxtk.families import cnot_diagram, feedback_loop, spider_trap

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def cnot():
    return cnot_diagram()


@pytest.fixture
def trap():
    return spider_trap()


@pytest.fixture
def loop():
    return feedback_loop()
