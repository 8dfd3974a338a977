import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "aepkit", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("aepkit")


@pytest.fixture(scope="session")
def tasep():
    from aepkit.model import TASEP
    return TASEP
