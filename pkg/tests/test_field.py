import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfforce1d.dynamics import integrate
from selfforce1d.field import (
    Trajectory,
    check_C1_lightcone,
    eval_field,
    eval_V,
    field_arrays,
    jump_quantities,
    retarded_time_minus,
    retarded_time_plus,
    write_snapshot_csv,
)
from selfforce1d.model import (
    LightSpeedError,
    OutOfDomainError,
    PhysicalParams,
    RadiationPulse,
    bump_pulse,
    incoming_sine_pulse,
    make_profiles,
    smooth_pulse,
)


def linear_trajectory(v, t_end=10.0):
    return Trajectory.from_function(lambda t: v * t, lambda t: np.full_like(t, v), t_end, n=201)


# -- retarded time -------------------------------------------------------------


def test_static_retarded_times():
    traj = Trajectory.static(10.0)
    x = np.linspace(0, 10, 21)
    np.testing.assert_allclose(retarded_time_plus(traj, x), x, atol=1e-14)
    np.testing.assert_allclose(retarded_time_minus(traj, -x), x, atol=1e-14)


@pytest.mark.parametrize("v", [0.5, -0.5, 0.95, -0.95])
def test_linear_retarded_times(v):
    traj = linear_trajectory(v)
    tau = np.linspace(0, 10, 11)
    xp = tau * (1 + v)  # attained values of q + tau
    xm = tau * (v - 1)  # attained values of q - tau
    np.testing.assert_allclose(retarded_time_plus(traj, xp), xp / (1 + v), atol=1e-12)
    np.testing.assert_allclose(retarded_time_minus(traj, xm), xm / (v - 1), atol=1e-12)


def test_retarded_time_residual_on_integrator_path(instability_run):
    _, _, _, traj = instability_run
    hi = traj.t_end + traj.q(traj.t_end)
    x = np.linspace(0, hi, 997)
    tau = retarded_time_plus(traj, x)
    assert np.max(np.abs(traj.q(tau) + tau - x)) <= 1e-10
    lo = traj.q(traj.t_end) - traj.t_end
    y = np.linspace(lo, 0, 997)
    tau = retarded_time_minus(traj, y)
    assert np.max(np.abs(traj.q(tau) - tau - y)) <= 1e-10


def test_retarded_time_out_of_range():
    traj = Trajectory.static(2.0)
    with pytest.raises(OutOfDomainError):
        retarded_time_plus(traj, 3.0)
    with pytest.raises(OutOfDomainError):
        retarded_time_plus(traj, -0.1)


def test_trajectory_rejects_superluminal_knots():
    with pytest.raises(LightSpeedError):
        linear_trajectory(1 - 1e-7)


def test_trajectory_qdot_matches_derivative(stability_run):
    _, _, _, traj = stability_run
    t = traj.t[1:-1]
    h = 1e-6
    fd = (traj.q(t + h) - traj.q(t - h)) / (2 * h)
    np.testing.assert_allclose(traj.qdot(t), fd, atol=1e-9)
    assert traj.starts_at_rest


def test_trajectory_span_checked():
    traj = Trajectory.static(1.0)
    with pytest.raises(OutOfDomainError):
        traj.q(1.5)


# -- free radiation -------------------------------------------------------------


def test_eval_V_zero_pulse():
    assert eval_V(RadiationPulse(), 1.3, -0.4) == (0.0, 0.0, 0.0)


def test_eval_V_without_velocity():
    pulse = bump_pulse()
    t, s = 0.7, np.linspace(-4, 4, 81)
    V, _, _ = eval_V(pulse, t, s)
    np.testing.assert_allclose(V, 0.5 * (pulse.v0(s - t) + pulse.v0(s + t)), atol=0)


@pytest.mark.parametrize("pulse", [incoming_sine_pulse(0.3), smooth_pulse()], ids=["sine", "smooth"])
def test_eval_V_derivatives_by_finite_differences(pulse):
    rng = np.random.default_rng(1)
    t = rng.uniform(0, 5, 200)
    s = rng.uniform(-8, 8, 200)
    edges = np.array(pulse.breakpoints)
    far = np.all(np.abs((s + t)[:, None] - edges) > 1e-3, axis=1) & np.all(np.abs((s - t)[:, None] - edges) > 1e-3, axis=1)
    t, s = t[far], s[far]
    h = 1e-5
    _, Vt, Vs = eval_V(pulse, t, s)
    fs = (eval_V(pulse, t, s + h)[0] - eval_V(pulse, t, s - h)[0]) / (2 * h)
    ft = (eval_V(pulse, t + h, s)[0] - eval_V(pulse, t - h, s)[0]) / (2 * h)
    np.testing.assert_allclose(Vs, fs, atol=1e-8)
    np.testing.assert_allclose(Vt, ft, atol=1e-8)


def test_eval_V_initial_data():
    pulse = incoming_sine_pulse(0.3)
    s = np.linspace(-5, 5, 101)
    V, Vt, _ = eval_V(pulse, np.zeros_like(s), s)
    np.testing.assert_allclose(V, pulse.v0(s), atol=1e-15)
    np.testing.assert_allclose(Vt, pulse.v1(s), atol=1e-15)


# -- full field -----------------------------------------------------------------


@pytest.mark.parametrize("a", [1.0, -2.0])
def test_static_field(a):
    traj = Trajectory.static(20.0)
    s = np.linspace(-30, 30, 121)
    for t in (0.0, 1.0, 15.0):
        u, ut, us = field_arrays(a, traj, RadiationPulse(), np.full_like(s, t), s)
        np.testing.assert_allclose(u, -0.5 * a * np.abs(s), atol=1e-12)
        np.testing.assert_allclose(ut, 0.0, atol=1e-15)


def test_outside_cone_is_free_field(instability_run):
    params, pulse, _, traj = instability_run
    t = 6.0
    s = np.concatenate([np.linspace(-20, -t - 1e-9, 50), np.linspace(t + 1e-9, 20, 50)])
    u, ut, us = field_arrays(params.a, traj, pulse, np.full_like(s, t), s)
    V, Vt, Vs = eval_V(pulse, np.full_like(s, t), s)
    np.testing.assert_array_equal(u, -0.5 * params.a * np.abs(s) + V)
    np.testing.assert_array_equal(ut, Vt)


def test_continuity_across_path(moving_run):
    params, pulse, _, traj = moving_run
    for t in np.linspace(0.1, traj.t_end, 37):
        smp = eval_field(params.a, traj, pulse, t, traj.q(t))
        assert abs(smp.u_left - smp.u_right) <= 1e-10
        J = jump_quantities(params.a, traj.qdot(t))
        assert smp.u_s_right - smp.u_s_left == pytest.approx(J.ws, abs=1e-8)
        assert smp.u_t_right - smp.u_t_left == pytest.approx(J.wt, abs=1e-8)


def test_one_sided_values_agree_off_path(moving_run):
    params, pulse, _, traj = moving_run
    smp = eval_field(params.a, traj, pulse, 5.0, traj.q(5.0) + 0.3)
    assert smp.u_s_left == smp.u_s_right and smp.u_t_left == smp.u_t_right


def test_field_needs_nonnegative_time():
    with pytest.raises(OutOfDomainError):
        eval_field(1.0, Trajectory.static(1.0), RadiationPulse(), -0.5, 0.0)


def test_wave_equation_residual():
    params = PhysicalParams(1.0, -1.0)
    pulse = smooth_pulse()
    traj = Trajectory.from_solve(integrate(params, make_profiles(pulse), span=(0.0, 8.0)))
    rng = np.random.default_rng(7)
    t = rng.uniform(0.5, 7.5, 400)
    s = rng.uniform(-7, 7, 400)
    h = 1e-4
    keep = (np.abs(np.abs(s) - t) > 10 * h) & (np.abs(s - traj.q(t)) > 10 * h)
    t, s = t[keep], s[keep]

    def u(tt, ss):
        return field_arrays(params.a, traj, pulse, tt, ss)[0]

    utt = (u(t + h, s) - 2 * u(t, s) + u(t - h, s)) / h**2
    uss = (u(t, s + h) - 2 * u(t, s) + u(t, s - h)) / h**2
    assert np.max(np.abs(utt - uss)) <= 1e-5


# -- jumps ----------------------------------------------------------------------


def test_jump_table_at_rest():
    J = jump_quantities(1.0, 0.0)
    assert (J.ws, J.wt, J.ws_wt, J.wt2, J.ws2) == (-1.0, 0.0, 0.0, 0.0, 0.0)


def test_jump_table_half_speed():
    # frozen: substitute qdot = 1/2, a = 1
    J = jump_quantities(1.0, 0.5)
    assert J.ws == pytest.approx(-4 / 3, abs=1e-15)
    assert J.wt == pytest.approx(2 / 3, abs=1e-15)
    assert J.ws_wt == pytest.approx(-4 / 9, abs=1e-15)
    assert J.wt2 == pytest.approx(2 / 9, abs=1e-15)
    assert J.ws2 == pytest.approx(8 / 9, abs=1e-15)


def test_jump_table_matches_field_at_half_speed():
    traj = linear_trajectory(0.5)
    t = 2.0
    smp = eval_field(1.0, traj, RadiationPulse(), t, traj.q(t))
    assert smp.u_s_right - smp.u_s_left == pytest.approx(-4 / 3, abs=1e-12)
    assert smp.u_t_right - smp.u_t_left == pytest.approx(2 / 3, abs=1e-12)
    assert smp.u_s_right * smp.u_t_right - smp.u_s_left * smp.u_t_left == pytest.approx(-4 / 9, abs=1e-12)


@given(st.floats(-0.999, 0.999), st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_jump_parity(v, a):
    J, K = jump_quantities(a, v), jump_quantities(a, -v)
    assert K.wt == pytest.approx(-J.wt, rel=1e-12, abs=1e-300)
    assert K.ws == pytest.approx(J.ws, rel=1e-12)
    assert K.ws_wt == pytest.approx(J.ws_wt, rel=1e-12)
    assert K.ws2 == pytest.approx(-J.ws2, rel=1e-12, abs=1e-300)


def test_jump_light_speed():
    with pytest.raises(LightSpeedError):
        jump_quantities(1.0, 1.0)


# -- light cone -----------------------------------------------------------------


def test_lightcone_static_exact():
    traj = Trajectory.static(10.0)
    for t in (0.5, 2.0, 7.0):
        assert check_C1_lightcone(1.0, traj, bump_pulse(), t).max == 0.0


@pytest.mark.parametrize("run", ["stability_run", "instability_run", "moving_run"])
def test_lightcone_integrator(run, request):
    params, pulse, _, traj = request.getfixturevalue(run)
    for t in np.linspace(0.05, traj.t_end, 20):
        assert check_C1_lightcone(params.a, traj, pulse, t).max <= 1e-8


def test_lightcone_needs_positive_time():
    with pytest.raises(ValueError):
        check_C1_lightcone(1.0, Trajectory.static(1.0), RadiationPulse(), 0.0)


def test_snapshot_csv(tmp_path, stability_run):
    params, pulse, _, traj = stability_run
    path = write_snapshot_csv(tmp_path / "snap.csv", params.a, traj, pulse, 3.0, np.linspace(-5, 5, 11))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "s", "u", "u_t", "u_s"]
    assert len(rows) == 12
    assert float(rows[1][0]) == 3.0
