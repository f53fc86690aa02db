import pytest
from hypothesis import settings

from selfforce1d.dynamics import integrate
from selfforce1d.field import Trajectory
from selfforce1d.model import PhysicalParams, bump_pulse, incoming_sine_pulse, make_profiles

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def _run(params, pulse, t_end):
    res = integrate(params, make_profiles(pulse), span=(0.0, t_end))
    return params, pulse, res, Trajectory.from_solve(res)


@pytest.fixture(scope="session")
def stability_run():
    """m = 1, a = 1, sine bump on [1, 2]."""
    return _run(PhysicalParams(1.0, 1.0), bump_pulse(), 30.0)


@pytest.fixture(scope="session")
def instability_run():
    """m = -1, a = 1, incoming sine pulse with beta = 0.1."""
    return _run(PhysicalParams(1.0, -1.0), incoming_sine_pulse(0.1), 30.0)


@pytest.fixture(scope="session")
def moving_run():
    """m = 1, a = 1, strong incoming pulse: the particle moves visibly."""
    return _run(PhysicalParams(1.0, 1.0), incoming_sine_pulse(0.5), 12.0)
