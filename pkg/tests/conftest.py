import pytest

from niquad import ControllerParams, QuadParams


@pytest.fixture
def bench_quad() -> QuadParams:
    """Benchtop platform: 0.5 kg, symmetric roll/pitch inertia."""
    return QuadParams()


@pytest.fixture
def bench_ctrl() -> ControllerParams:
    """Default gains: kp = (5, 5), Gamma = 160, delta = 0.6, gamma = 0.8."""
    return ControllerParams()
