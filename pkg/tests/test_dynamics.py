import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfforce1d.dynamics import (
    IntegratorOptions,
    blowup_time,
    exit_angle_slope,
    fit_decay_rate,
    flow_bt,
    integrate,
    integrate_qp,
    lemma1_flow,
    norad_invariant,
    reverse_flow_rhs,
    rhs_sys3,
    sensitivity_closed,
    sensitivity_ode,
    sensitivity_quadrature,
    sensitivity_Z,
    theta_closed_norad,
)
from selfforce1d.model import (
    HALF_PI,
    CharacteristicState,
    LightSpeedError,
    PhysicalParams,
    ProfilePair,
    RadiationPulse,
    incoming_sine_pulse,
    make_profiles,
    sine_window,
    zero,
)

Z_11 = 2 * math.pi * (1 - math.exp(-1)) / (4 * math.pi**2 + 1)  # frozen closed form, a = |m| = 1
NO_RADIATION = make_profiles(RadiationPulse())


# -- vector field -----------------------------------------------------------------


def test_static_vector_field():
    assert rhs_sys3(PhysicalParams(1.0, 2.0), NO_RADIATION, CharacteristicState.initial()) == (1.0, -1.0, 0.0)


def test_cannot_cross_light_speed_for_positive_mass():
    params = PhysicalParams(1.3, 2.0)
    _, _, dth = rhs_sys3(params, NO_RADIATION, CharacteristicState(0, 0, 0, HALF_PI))
    assert dth == pytest.approx(-params.a**2 / (2 * params.m))


@given(st.floats(-3, -1), st.floats(-1.5, 1.5), st.floats(0.1, 3), st.floats(0.1, 3))
def test_negative_mass_form(b, theta, a, am):
    beta = 0.4
    G = sine_window(-3.0, -1.0, beta)
    params = PhysicalParams(a, -am)
    _, _, dth = rhs_sys3(params, ProfilePair(zero(), G), CharacteristicState(0.0, 0.0, b, theta))
    expected = -(a / (2 * am)) * G(b) * math.cos(theta) ** 2 + (a * a / (2 * am)) * math.sin(theta)
    assert dth == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_reverse_flow_rhs_values():
    params = PhysicalParams(1.0, -1.0)
    prof = make_profiles(incoming_sine_pulse(0.3))
    db, dth = reverse_flow_rhs(params, prof, CharacteristicState(0.0, 0.0, -2.5, 0.0))
    assert db == 1.0
    assert dth == pytest.approx(0.5 * 0.3 * math.sin(-2.5 * math.pi))
    assert reverse_flow_rhs(params, NO_RADIATION, CharacteristicState(0.0, 0.0, 1.0, 0.0)) == (1.0, 0.0)


@pytest.mark.parametrize("theta0", [0.0, 0.3, -0.7])
def test_reverse_flow_round_trip(theta0):
    params = PhysicalParams(1.0, -1.0)
    G = sine_window(-3.0, -1.0, 0.5)
    b1, th1 = flow_bt(params, G, -0.5, theta0, 2.0)
    b2, th2 = flow_bt(params, G, b1, th1, 2.0, reverse=True)
    assert b2 == pytest.approx(-0.5, abs=1e-8)
    assert th2 == pytest.approx(theta0, abs=1e-8)


# -- integrator ---------------------------------------------------------------


@pytest.mark.parametrize("m", [1.0, -1.0])
def test_static_path_held(m):
    res = integrate(PhysicalParams(1.0, m), NO_RADIATION, span=(0.0, 100.0))
    d, b, th = res(np.linspace(0, 100, 1001))
    t = np.linspace(0, 100, 1001)
    assert np.max(np.abs(d - t)) <= 1e-10 and np.max(np.abs(b + t)) <= 1e-10 and np.max(np.abs(th)) <= 1e-10
    assert res.outcome.verdict() == "REST(0)"


@pytest.mark.parametrize("run", ["stability_run", "instability_run", "moving_run"])
def test_monotone_characteristics(run, request):
    _, _, res, _ = request.getfixturevalue(run)
    assert np.all(np.diff(res.y[0]) >= 0)
    assert np.all(np.diff(res.y[1]) <= 0)
    t = res.t
    assert np.all(res.y[0] <= 2 * t + 1e-12) and np.all(res.y[0] >= -1e-12)
    assert np.all(res.y[1] >= -2 * t - 1e-12) and np.all(res.y[1] <= 1e-12)


def test_region_one_exact(stability_run):
    _, _, res, _ = stability_run
    first = min(e.t for e in res.events if e.kind in ("F_edge", "G_edge"))
    assert first == pytest.approx(1.0, abs=1e-10)  # bump starts at |s| = 1
    t = np.linspace(0, first, 101)
    d, b, th = res(t)
    assert np.max(np.abs(th)) <= 1e-12
    np.testing.assert_allclose(d, t, atol=1e-12)


def test_events_satisfy_conditions(instability_run):
    params, pulse, res, _ = instability_run
    for e in res.events:
        assert res.t[0] <= e.t <= res.t[-1]
        if e.kind == "G_edge":
            assert min(abs(e.state.b - x) for x in (-3.0, -1.0)) <= 1e-10
        if e.kind == "lightspeed":
            assert abs(e.state.theta) >= HALF_PI - 1e-8 - 1e-12
    assert res.outcome.kind == "lightspeed"


def test_stability_run_verdict(stability_run):
    params, _, res, _ = stability_run
    assert res.outcome.kind == "decaying"
    assert res.outcome.value == pytest.approx(params.self_rate, rel=0.05)
    assert fit_decay_rate(res) == res.outcome.value
    assert not res.events_of("lightspeed")


def test_stop_at_rest_option():
    opts = IntegratorOptions(stop_at_rest=True, tol_rest=1e-6)
    res = integrate(PhysicalParams(1.0, 1.0), make_profiles(incoming_sine_pulse(0.2)), span=(0.0, 200.0), opts=opts)
    assert res.outcome.kind == "rest"
    assert res.t[-1] < 200.0
    assert abs(res.y[2, -1]) <= 1e-6 * (1 + 1e-6)


def test_free_motion_invariant_positive_mass():
    params = PhysicalParams(1.0, 1.0)
    init = CharacteristicState(0.0, 0.0, 0.0, 0.8)
    res = integrate(params, NO_RADIATION, init, span=(0.0, 15.0))
    t = np.linspace(0, 15, 301)
    th = res.theta_at(t)
    inv = norad_invariant(params, t, th)
    assert np.max(np.abs(inv / inv[0] - 1)) <= 1e-8
    np.testing.assert_allclose(th, theta_closed_norad(params, 0.0, 0.8, t), atol=1e-10)


@pytest.mark.parametrize("theta0", [-math.pi / 6, 0.4, -1.2])
def test_blowup_time(theta0):
    params = PhysicalParams(1.0, -1.0)
    res = integrate(params, NO_RADIATION, CharacteristicState(0.0, 0.0, 0.0, theta0), span=(0.0, 20.0))
    (ev,) = res.events_of("lightspeed")
    assert ev.t == pytest.approx(blowup_time(params, 0.0, theta0), rel=1e-6)
    assert math.copysign(1, ev.state.theta) == math.copysign(1, theta0)


def test_blowup_time_reference():
    assert blowup_time(PhysicalParams(1.0, -1.0), 0.0, -math.pi / 6) == pytest.approx(2 * math.log(2 + math.sqrt(3)), rel=1e-14)
    assert blowup_time(PhysicalParams(2.0, -3.0), 1.0, 0.5) == pytest.approx(
        1.0 + 2 * 3 / 4 * math.log(1 / math.sin(0.5) + 1 / math.tan(0.5))
    )
    assert blowup_time(PhysicalParams(1.0, 1.0), 0.0, 0.5) == math.inf


def test_closed_free_motion_branches():
    assert theta_closed_norad(PhysicalParams(1.0, 1.0), 0.0, 0.0, 5.0) == 0.0
    assert abs(theta_closed_norad(PhysicalParams(1.0, 1.0), 0.0, 1.0, 80.0)) < 1e-15
    params = PhysicalParams(1.0, -1.0)
    t1 = blowup_time(params, 0.0, 0.3)
    assert theta_closed_norad(params, 0.0, 0.3, t1 * (1 - 1e-12)) == pytest.approx(HALF_PI, abs=1e-5)
    with pytest.raises(LightSpeedError):
        theta_closed_norad(params, 0.0, 0.3, t1 + 0.1)


def test_initial_angle_at_limit_rejected():
    with pytest.raises(LightSpeedError):
        integrate(PhysicalParams(1.0, 1.0), NO_RADIATION, CharacteristicState(0.0, 0.0, 0.0, HALF_PI))


def test_dense_queries(instability_run):
    _, _, res, _ = instability_run
    tb = res.time_at_b(-3.0)
    assert res(tb)[1] == pytest.approx(-3.0, abs=1e-12)
    st_ = res.state_at(tb)
    assert st_.time_mismatch() <= 1e-9
    with pytest.raises(ValueError):
        res.time_at_b(-1e3)


# -- sensitivity ----------------------------------------------------------------


def test_sensitivity_reference():
    params = PhysicalParams(1.0, -1.0)
    rep = sensitivity_Z(params)
    assert rep.value == pytest.approx(Z_11, abs=1e-15)
    assert rep.value == pytest.approx(0.09812, abs=5e-6)
    assert rep.spread <= 1e-8


@given(st.floats(0.05, 5), st.floats(0.05, 5))
def test_sensitivity_routes_agree(a, am):
    params = PhysicalParams(a, -am)
    vals = sensitivity_closed(params), sensitivity_quadrature(params), sensitivity_ode(params)
    assert vals[0] > 0
    assert max(vals) - min(vals) <= 1e-8 * max(1.0, vals[0])


def test_sensitivity_requires_positive_charge():
    with pytest.raises(ValueError):
        sensitivity_Z(PhysicalParams(-1.0, -1.0))


def test_lemma1_flow_perturbation():
    params = PhysicalParams(1.0, -1.0)
    assert lemma1_flow(params, 0.0) == 0.0
    errs = []
    for beta in (1e-2, 1e-3, 1e-4):
        y = lemma1_flow(params, beta)
        assert y > 0
        errs.append(abs(y / beta - Z_11))
    assert abs(lemma1_flow(params, 1e-3) / 1e-3 / Z_11 - 1) < 0.01
    for e1, e2 in zip(errs, errs[1:]):
        assert math.log10(e1 / e2) == pytest.approx(1.0, abs=0.1)


def test_forward_exit_angle_slope(instability_run):
    params = PhysicalParams(1.0, -1.0)
    assert exit_angle_slope(params) == pytest.approx(-math.e * Z_11, rel=1e-14)
    res = integrate(params, make_profiles(incoming_sine_pulse(1e-4)), span=(0.0, 40.0))
    assert res.theta_at_b(-3.0) / 1e-4 == pytest.approx(exit_angle_slope(params), rel=5e-4)


# -- unreduced equations ---------------------------------------------------------


@pytest.mark.parametrize("run", ["stability_run", "moving_run"])
def test_qp_cross_check(run, request):
    params, pulse, _, _ = request.getfixturevalue(run)
    tight = IntegratorOptions(rtol=1e-13, atol=1e-15)
    res = integrate(params, make_profiles(pulse), span=(0.0, 12.0), opts=tight)
    breaks = [e.t for e in res.events if e.kind in ("F_edge", "G_edge")]
    qp = integrate_qp(params, pulse, (0.0, 12.0), breaks=breaks, rtol=1e-13, atol=1e-15)
    d, b, th = res(qp.t)
    np.testing.assert_allclose(0.5 * (d + b), qp.q, atol=1e-8)
    np.testing.assert_allclose(params.m * np.tan(th), qp.p, atol=1e-8)
    assert not qp.stopped_at_limit
