import pytest
from hypothesis import HealthCheck, settings
from mpmath import mp

settings.register_profile(
    "asx",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("asx")


@pytest.fixture(autouse=True)
def _restore_mp_precision():
    # oracle arithmetic inside tests runs at the library's default precision
    prec = mp.prec
    mp.prec = 256
    yield
    mp.prec = prec
