import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfforce1d.model import (
    CharacteristicState,
    LightSpeedError,
    ParticleState,
    PhysicalParams,
    Piece,
    RadiationPulse,
    SmoothFunction,
    bump_pulse,
    function_from_dict,
    incoming_sine_pulse,
    make_profiles,
    p_from_theta,
    poly_bump,
    sine_bump,
    sine_window,
    smooth_pulse,
    theta_from_p,
    zero,
)

xs = np.linspace(-6, 6, 2401)


def test_params_reject_zero():
    with pytest.raises(ValueError):
        PhysicalParams(0.0, 1.0)
    with pytest.raises(ValueError):
        PhysicalParams(1.0, 0.0)


def test_self_rate_signed():
    assert PhysicalParams(2.0, -4.0).self_rate == pytest.approx(-0.5)
    assert PhysicalParams(2.0, -4.0).abs_m == 4.0


def test_zero_pulse_profiles_vanish():
    prof = make_profiles(RadiationPulse())
    assert prof.F.is_zero and prof.G.is_zero
    assert np.all(prof.F(xs) == 0) and np.all(prof.G(xs) == 0)


def test_incoming_pulse_is_purely_incoming():
    beta = 0.37
    prof = make_profiles(incoming_sine_pulse(beta))
    expected = np.where((xs >= -3) & (xs <= -1), beta * np.sin(np.pi * xs), 0.0)
    np.testing.assert_allclose(prof.G(xs), expected, atol=1e-14)
    np.testing.assert_allclose(prof.F(xs), 0.0, atol=1e-14)


def test_incoming_pulse_split():
    beta = 0.2
    pulse = incoming_sine_pulse(beta)
    inside = (xs >= -3) & (xs <= -1)
    np.testing.assert_allclose(pulse.v1(xs), np.where(inside, -0.5 * beta * np.sin(np.pi * xs), 0), atol=1e-14)
    np.testing.assert_allclose(pulse.v0(xs), np.where(inside, -beta / (2 * np.pi) * (1 + np.cos(np.pi * xs)), 0), atol=1e-14)


def test_bump_has_equal_profiles():
    prof = make_profiles(bump_pulse())
    np.testing.assert_allclose(prof.F(xs), prof.G(xs), atol=0)
    support = prof.F.support
    assert 1.0 <= support[0] and support[1] <= 2.0


@pytest.mark.parametrize("pulse", [incoming_sine_pulse(0.3), bump_pulse(), smooth_pulse()], ids=["sine", "bump", "smooth"])
def test_profile_identities(pulse):
    prof = make_profiles(pulse)
    dv0 = pulse.v0.derivative()
    np.testing.assert_allclose(prof.F(xs) + prof.G(xs), 2 * dv0(xs), atol=1e-14)
    np.testing.assert_allclose(prof.F(xs) - prof.G(xs), 2 * pulse.v1(xs), atol=1e-14)


def test_pulse_rejects_origin():
    with pytest.raises(ValueError, match="contains the particle"):
        RadiationPulse(v0=sine_bump(-1.0, 1.0, 0.1))


def test_pulse_rejects_discontinuous_v1():
    with pytest.raises(ValueError, match="continuous"):
        RadiationPulse(v1=sine_window(1.5, 2.5, 1.0))


def test_pulse_rejects_kinked_v0():
    with pytest.raises(ValueError, match="C\\^1"):
        RadiationPulse(v0=sine_window(1.0, 2.0, 1.0))


def test_primitive_requires_zero_mass():
    with pytest.raises(ValueError, match="nonzero mass"):
        sine_bump(1.0, 2.0, 1.0).primitive()


def test_derivative_matches_finite_difference():
    f = poly_bump(1.0, 3.0, 0.7, order=4) + sine_window(-4.0, -2.0, 0.3)
    h = 1e-3
    x = np.linspace(-5, 5, 501)
    x = x[np.min(np.abs(x[:, None] - np.array(f.breakpoints)[None, :]), axis=1) > 3 * h]
    fd = (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)
    np.testing.assert_allclose(f.derivative()(x), fd, atol=1e-9)


def test_integral_matches_quadrature():
    from scipy.integrate import quad

    f = poly_bump(1.0, 3.0, 0.7, order=3) + sine_window(-4.0, -2.0, 0.3)
    for lo, hi in [(-5.0, 5.0), (-3.3, 2.2), (1.5, 1.7)]:
        ref, _ = quad(f, lo, hi, points=[-4, -2, 1, 3], epsabs=1e-14)
        assert f.integral(lo, hi) == pytest.approx(ref, abs=1e-12)


def test_poly_bump_far_from_origin_is_smooth():
    f = poly_bump(7.3, 7.6, 0.9, order=2)
    assert f.max_jump(0) < 1e-12
    assert f.max_jump(1) < 1e-9 * max(1.0, f.derivative().sup_norm())


def test_descriptor_round_trip():
    f = poly_bump(1.0, 2.0, 0.5) + sine_window(-3.0, -1.0, 0.2) * 3.0
    g = SmoothFunction.from_dict(f.to_dict())
    np.testing.assert_array_equal(f(xs), g(xs))


def test_function_from_dict_kinds():
    desc = {
        "kind": "sum",
        "terms": [
            {"kind": "sine_window", "lo": -3, "hi": -1, "amplitude": 0.1},
            {"kind": "scaled", "factor": 2.0, "term": {"kind": "poly_bump", "lo": 1, "hi": 2, "amplitude": 0.1}},
            {"kind": "zero"},
        ],
    }
    f = function_from_dict(desc)
    assert f(-2.5) == pytest.approx(0.1 * math.sin(-2.5 * math.pi))
    assert f(1.5) == pytest.approx(0.2)
    with pytest.raises(ValueError, match="unknown function kind"):
        function_from_dict({"kind": "spline"})


def test_pulse_dict_forms_agree():
    via_profiles = RadiationPulse.from_dict({"G": {"kind": "sine_window", "lo": -3, "hi": -1, "amplitude": 0.4}})
    direct = incoming_sine_pulse(0.4)
    np.testing.assert_allclose(via_profiles.v0(xs), direct.v0(xs), atol=1e-15)
    np.testing.assert_allclose(via_profiles.v1(xs), direct.v1(xs), atol=1e-15)
    again = RadiationPulse.from_dict(direct.to_dict())
    np.testing.assert_array_equal(again.v1(xs), direct.v1(xs))


def test_piece_window_validation():
    with pytest.raises(ValueError):
        Piece(2.0, 1.0)
    assert zero().support is None


def test_theta_p_examples():
    assert theta_from_p(0.0, 3.0) == 0.0
    assert p_from_theta(math.pi / 4, 2.0) == pytest.approx(2.0)
    with pytest.raises(LightSpeedError):
        p_from_theta(math.pi / 2, 1.0)


@given(
    p=st.floats(-1e3, 1e3, allow_nan=False),
    m=st.floats(0.05, 20).flatmap(lambda x: st.sampled_from([x, -x])),
)
def test_theta_p_round_trip(p, m):
    p = p * abs(m)  # |p/m| <= 1e3
    th = theta_from_p(p, m)
    assert abs(th) < math.pi / 2
    assert p_from_theta(th, m) == pytest.approx(p, rel=1e-12, abs=1e-12)
    r = p / m
    assert math.sin(th) == pytest.approx(r / math.sqrt(1 + r * r), rel=1e-12, abs=1e-15)


@given(st.floats(-1.5, 1.5), st.floats(0, 50), st.floats(-3, 3))
def test_characteristic_state_consistency(theta, t, q):
    cs = CharacteristicState.from_particle(t, q, theta)
    assert cs.q == pytest.approx(q, abs=1e-12)
    assert cs.time_mismatch() <= 1e-12
    ps = ParticleState.from_theta(t, q, theta, m=2.0)
    assert ps.qdot == pytest.approx(cs.qdot)


def test_initial_state():
    cs = CharacteristicState.initial()
    assert (cs.t, cs.d, cs.b, cs.theta) == (0.0, 0.0, 0.0, 0.0)
