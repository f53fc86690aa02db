"""Acceptance checks shared by ``selfforce1d verify`` and the test suite.

Each check returns a :class:`CriterionResult`; :func:`run_all` prints one
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (
    IntegratorOptions,
    blowup_time,
    exit_angle_slope,
    integrate,
    integrate_qp,
    lemma1_flow,
    norad_invariant,
    sensitivity_Z,
)
from .field import Trajectory, check_C1_lightcone, eval_field, jump_quantities
from .force import force_closed, force_jump
from .model import (
    CharacteristicState,
    PhysicalParams,
    RadiationPulse,
    bump_pulse,
    incoming_sine_pulse,
    make_profiles,
    poly_bump,
    sine_window,
    smooth_pulse,
)
from .oracle import convergence_study, momentum_balance
from .scenario import preset_scenario, sweep_beta

# Frozen oracle values, computed independently of the implementation.
Z_REFERENCE = 2 * math.pi * (1 - math.exp(-1)) / (4 * math.pi**2 + 1)  # a = 1, |m| = 1
BLOWUP_REFERENCE = 2 * math.log(2 + math.sqrt(3))  # a = 1, m = -1, theta0 = -pi/6
SEED = 20240601


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d}. {self.title}: {self.detail} ({self.elapsed:.2f} s)"


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    start = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - start)


def _trajectories() -> dict[str, tuple[PhysicalParams, RadiationPulse, Trajectory]]:
    out = {}
    for name, params, pulse, span in (
        ("stability", PhysicalParams(1.0, 1.0), bump_pulse(), (0.0, 30.0)),
        ("instability", PhysicalParams(1.0, -1.0), incoming_sine_pulse(0.1), (0.0, 30.0)),
    ):
        res = integrate(params, make_profiles(pulse), span=span)
        out[name] = (params, pulse, Trajectory.from_solve(res))
    return out


# ---------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    def body():
        start = time.perf_counter()
        dev = 0.0
        for m in (1.0, -1.0):
            res = integrate(PhysicalParams(1.0, m), make_profiles(RadiationPulse()), span=(0.0, 100.0))
            tt = np.union1d(res.t, np.linspace(0, 100, 2001))
            d, b, th = res(tt)
            dev = max(dev, np.max(np.abs(d - tt)), np.max(np.abs(b + tt)), np.max(np.abs(th)))
        traj = Trajectory.static(100.0)
        field_err = 0.0
        for a in (1.0, -0.7):
            for t in (0.5, 3.0, 50.0):
                for s in np.linspace(-80, 80, 41):
                    if s == 0:
                        continue
                    smp = eval_field(a, traj, RadiationPulse(), t, s)
                    field_err = max(field_err, abs(smp.u + 0.5 * a * abs(s)))
        elapsed = time.perf_counter() - start
        ok = dev <= 1e-9 and field_err <= 1e-10 and elapsed < 1.0
        return ok, f"path deviation {dev:.1e} (<=1e-9), field error {field_err:.1e} (<=1e-10), {elapsed:.2f} s (<1 s)"

    return _timed(1, "static solution exactness", body)


def criterion_2(trajs=None) -> CriterionResult:
    def body():
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for params, pulse, traj in (trajs or _trajectories()).values():
            for t in rng.uniform(1e-3, traj.t_end, 20):
                worst = max(worst, check_C1_lightcone(params.a, traj, pulse, float(t)).max)
        return worst <= 1e-8, f"max C1 residual across s=+-t {worst:.1e} (<=1e-8) over 2x20 samples"

    return _timed(2, "C1 across the light cone", body)


def criterion_3(trajs=None) -> CriterionResult:
    def body():
        worst_abs = worst_scaled = 0.0
        n = 0
        for params, pulse, traj in (trajs or _trajectories()).values():
            for t in np.linspace(traj.t_start + 1e-3, traj.t_end, 500):
                fj = force_jump(params, traj, pulse, float(t))
                fc = force_closed(params, pulse, float(t), traj.q(t), traj.qdot(t))
                worst_abs = max(worst_abs, abs(fj - fc))
                worst_scaled = max(worst_scaled, abs(fj - fc) / max(1.0, abs(fc)))
                n += 1
        return worst_scaled <= 1e-8, (
            f"{n} states, max |f_jump - f_closed| / max(1,|f|) = {worst_scaled:.1e} (<=1e-8), "
            f"max absolute {worst_abs:.1e}"
        )

    return _timed(3, "force equivalence (jump vs closed form)", body)


def _ramp_trajectory(v: float, t_end: float = 4.0) -> Trajectory:
    """Smoothly accelerates from rest to constant velocity ``v`` on ``[0, 1]``."""

    def q(t):
        return np.where(t <= 1, v * (t / 2 - np.sin(np.pi * t) / (2 * np.pi)), v / 2 + v * (t - 1))

    def qdot(t):
        return np.where(t <= 1, v * (1 - np.cos(np.pi * t)) / 2, v)

    return Trajectory.from_function(q, qdot, t_end)


def jump_table_errors(t: float = 3.0) -> dict[float, float]:
    errs = {}
    for v in (0.0, 0.3, -0.3, 0.9, -0.9):
        traj = _ramp_trajectory(v)
        smp = eval_field(1.0, traj, RadiationPulse(), t, traj.q(t))
        J = jump_quantities(1.0, traj.qdot(t))
        usl, usr, utl, utr = smp.u_s_left, smp.u_s_right, smp.u_t_left, smp.u_t_right
        measured = (usr - usl, utr - utl, usr * utr - usl * utl, usr**2 - usl**2, utr**2 - utl**2)
        closed = (J.ws, J.wt, J.ws_wt, J.ws2, J.wt2)
        errs[v] = max(abs(x - y) for x, y in zip(measured, closed))
    return errs


def criterion_4() -> CriterionResult:
    def body():
        errs = jump_table_errors()
        worst = max(errs.values())
        return worst <= 1e-8, f"max deviation {worst:.1e} (<=1e-8) at qdot in {{0, +-0.3, +-0.9}}"

    return _timed(4, "jump-formula table", body)


def random_stable_scenario(rng: np.random.Generator) -> tuple[PhysicalParams, RadiationPulse]:
    a = float(rng.uniform(0.2, 3.0)) * float(rng.choice([-1.0, 1.0]))
    m = float(rng.uniform(0.1, 5.0))
    width = float(rng.uniform(0.3, 2.0))
    lo = float(rng.uniform(0.3, 4.0))
    if rng.random() < 0.5:
        lo = -lo - width
    v0 = poly_bump(lo, lo + width, float(rng.uniform(-1, 1)), order=int(rng.integers(2, 5)))
    lo1 = float(rng.choice([-5.0, -4.0, -3.0, 1.0, 2.0, 3.0]))  # sin(pi x) vanishes at integer edges
    v1 = sine_window(lo1, lo1 + 2.0, float(rng.uniform(-1, 1)))
    return PhysicalParams(a, m), RadiationPulse(v0=v0, v1=v1)


def criterion_5() -> CriterionResult:
    def body():
        params = PhysicalParams(1.0, 1.0)
        res = integrate(params, make_profiles(bump_pulse()), span=(0.0, 60.0))
        tt = np.linspace(res.radiation_exit, 60.0, 4001)
        th = res.theta_at(tt)
        keep = np.abs(th) >= 1e-4  # below this atol = 1e-12 dominates the relative error
        inv = norad_invariant(params, tt[keep], th[keep])
        drift = float(np.max(np.abs(inv / inv[0] - 1)))
        rate = res.outcome.value if res.outcome.kind == "decaying" else float("nan")
        rate_err = abs(rate / params.self_rate - 1)
        rng = np.random.default_rng(SEED)
        verdicts = []
        for _ in range(50):
            p, pulse = random_stable_scenario(rng)
            verdicts.append(integrate(p, make_profiles(pulse), span=(0.0, 30.0)).outcome.kind)
        n_ls = verdicts.count("lightspeed")
        ok = drift <= 1e-8 and rate_err <= 0.05 and n_ls == 0
        return ok, (
            f"invariant drift {drift:.1e} (<=1e-8) on |theta|>=1e-4, decay rate {rate:.5f} "
            f"({rate_err:.2%} from a^2/2m, <=5%), fuzz: {n_ls}/50 LIGHTSPEED"
        )

    return _timed(5, "stability for positive mass", body)


def criterion_6() -> CriterionResult:
    def body():
        start = time.perf_counter()
        params = PhysicalParams(1.0, -1.0)
        theta0 = -math.pi / 6
        res = integrate(params, make_profiles(RadiationPulse()), CharacteristicState(0.0, 0.0, 0.0, theta0), span=(0.0, 10.0))
        ls = res.events_of("lightspeed")
        t_event = ls[0].t if ls else float("nan")
        rel = abs(t_event / BLOWUP_REFERENCE - 1)
        closed_rel = abs(blowup_time(params, 0.0, theta0) / BLOWUP_REFERENCE - 1)
        elapsed = time.perf_counter() - start
        ok = rel <= 1e-4 and closed_rel <= 1e-12 and elapsed < 1.0
        return ok, f"event t = {t_event:.8f} vs 2 ln(2+sqrt3) = {BLOWUP_REFERENCE:.8f}, rel {rel:.1e} (<=1e-4), {elapsed:.2f} s"

    return _timed(6, "blow-up time for negative mass", body)


def criterion_7() -> CriterionResult:
    def body():
        params = PhysicalParams(1.0, -1.0)
        rep = sensitivity_Z(params)
        betas = (1e-2, 1e-3, 1e-4)
        errs = [abs(lemma1_flow(params, b) / b - rep.value) for b in betas]
        orders = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
        ok = rep.spread <= 1e-8 and abs(rep.value - Z_REFERENCE) <= 1e-12 and all(0.8 <= o <= 1.2 for o in orders)
        return ok, (
            f"Z(1,0) = {rep.value:.10f}, spread {rep.spread:.1e} (<=1e-8); "
            f"|y/beta - Z| = {', '.join(f'{e:.1e}' for e in errs)}, orders {orders[0]:.2f}, {orders[1]:.2f} (O(beta))"
        )

    return _timed(7, "sensitivity Z(1,0) triple agreement", body)


def criterion_8() -> CriterionResult:
    def body():
        start = time.perf_counter()
        base = preset_scenario("instability", beta=1e-3)
        rows = sweep_beta(base, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
        elapsed = time.perf_counter() - start
        row = next(r for r in rows if r.beta == 1e-3)
        params = base.params
        Z = sensitivity_Z(params).value
        sign_ok = row.theta_at_b_minus3 < 0 and math.copysign(1, row.theta_at_b_minus3) == math.copysign(1, -Z)
        finite = all(math.isfinite(r.t_lightspeed) for r in rows)
        ok = sign_ok and finite and elapsed < 10.0
        return ok, (
            f"theta(b=-3) = {row.theta_at_b_minus3:.4e} < 0, theta/beta = {row.theta_over_beta:.6f} "
            f"(first-order slope {exit_angle_slope(params):.6f}), LIGHTSPEED at t = {row.t_lightspeed:.4f}; "
            f"5-beta sweep all finite={finite}, {elapsed:.2f} s (<10 s)"
        )

    return _timed(8, "end-to-end instability", body)


def criterion_9() -> CriterionResult:
    def body():
        start = time.perf_counter()
        params = PhysicalParams(1.0, -1.0)
        pulse = smooth_pulse()
        traj = Trajectory.from_solve(integrate(params, make_profiles(pulse), span=(0.0, 8.0)))
        rows = convergence_study(params.a, traj, pulse, [0.01, 0.005, 0.0025], t_end=4.0, window=5.0)
        errs = [r.linf_error for r in rows]
        orders = [r.order_estimate for r in rows[1:]]
        monotone = errs[0] > errs[1] > errs[2]
        kinked = incoming_sine_pulse(0.5)
        ktraj = Trajectory.from_solve(integrate(params, make_profiles(kinked), span=(0.0, 8.0)))
        krows = convergence_study(params.a, ktraj, kinked, [0.01, 0.005, 0.0025], t_end=4.0, window=5.0)
        korder = krows[-1].order_estimate

        eps_list = (1e-1, 1e-2, 1e-3)
        slopes, closure, res = {}, 0.0, {}
        for name, sp in (("sine", incoming_sine_pulse(0.5)), ("bump", bump_pulse())):
            straj = Trajectory.from_solve(integrate(PhysicalParams(1.0, 1.0), make_profiles(sp), span=(0.0, 8.0)))
            mbs = [momentum_balance(1.0, straj, sp, 1.5, 4.0, e) for e in eps_list]
            res[name] = [mb.residual for mb in mbs]
            slopes[name] = [math.log10(res[name][i] / res[name][i + 1]) for i in range(2)]
            closure = max(closure, max(mb.closure for mb in mbs))
        elapsed = time.perf_counter() - start
        ok = (
            monotone
            and min(orders) >= 1.8
            and all(0.9 <= s <= 1.1 for s in slopes["sine"])
            and closure <= 1e-9
            and elapsed < 60
        )
        return ok, (
            f"FD Linf {', '.join(f'{e:.2e}' for e in errs)}, orders {orders[0]:.2f}, {orders[1]:.2f} (>=1.8, C^4 pulse); "
            f"sine-window pulse order {korder:.2f} (C^0 data, not gated); "
            f"momentum residual {', '.join(f'{r:.2e}' for r in res['sine'])}, "
            f"slopes {slopes['sine'][0]:.3f}, {slopes['sine'][1]:.3f} (in [0.9, 1.1]); "
            f"bump pulse slopes {slopes['bump'][0]:.3f}, {slopes['bump'][1]:.3f} (not gated); "
            f"closure {closure:.1e} (<=1e-9); {elapsed:.1f} s (<60 s)"
        )

    return _timed(9, "oracle equivalence", body)


def cross_formulation_errors(params: PhysicalParams, pulse: RadiationPulse, t_end: float = 40.0) -> tuple[float, float, float]:
    """Max gaps in ``q``, ``theta`` and scaled ``p`` between the two formulations."""
    tight = IntegratorOptions(rtol=1e-13, atol=1e-15)
    res = integrate(params, make_profiles(pulse), span=(0.0, t_end), opts=tight)
    breaks = [e.t for e in res.events if e.kind in ("F_edge", "G_edge")]
    qp = integrate_qp(params, pulse, (0.0, float(res.t[-1])), breaks=breaks, rtol=1e-13, atol=1e-15)
    d, b, th = res(qp.t)
    keep = np.abs(th) <= math.pi / 2 - 1e-3
    p = params.m * np.tan(th[keep])
    eq = np.max(np.abs(0.5 * (d + b)[keep] - qp.q[keep]))
    eth = np.max(np.abs(np.arctan(qp.p[keep] / params.m) - th[keep]))
    ep = np.max(np.abs(p - qp.p[keep]) / np.maximum(1.0, np.abs(p)))
    return float(eq), float(eth), float(ep)


def criterion_10() -> CriterionResult:
    def body():
        worst = [0.0, 0.0, 0.0]
        for params, pulse in (
            (PhysicalParams(1.0, 1.0), bump_pulse()),
            (PhysicalParams(1.0, -1.0), incoming_sine_pulse(1e-1)),
            (PhysicalParams(1.0, -1.0), incoming_sine_pulse(1e-3)),
        ):
            worst = [max(w, e) for w, e in zip(worst, cross_formulation_errors(params, pulse))]
        ok = max(worst) <= 1e-8
        return ok, (
            f"max |dq| {worst[0]:.1e}, |dtheta| {worst[1]:.1e}, |dp|/max(1,|p|) {worst[2]:.1e} (<=1e-8) "
            f"while |theta| <= pi/2 - 1e-3"
        )

    return _timed(10, "cross-formulation consistency", body)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


def run_all(only=None, stream=None) -> list[CriterionResult]:
    stream = stream or sys.stdout
    results = []
    for n, fn in CRITERIA.items():
        if only and n not in only:
            continue
        r = fn()
        print(r.line(), file=stream, flush=True)
        results.append(r)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed", file=stream)
    return results
