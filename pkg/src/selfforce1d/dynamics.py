"""Particle dynamics in characteristic variables.

With ``p/m = tan(theta)``, ``d = q + t`` and ``b = q - t`` the equations of
motion become the autonomous system

    d' = sin(theta) + 1
    b' = sin(theta) - 1
    theta' = (a / 2m) (F(d) + G(b)) cos^2(theta) - (a^2 / 2m) sin(theta)

which stays regular up to the light-speed boundary ``|theta| = pi/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .model import (
    HALF_PI,
    CharacteristicState,
    ConsistencyError,
    IntegrationError,
    LightSpeedError,
    PhysicalParams,
    ProfilePair,
    RadiationPulse,
    SmoothFunction,
    p_from_theta,
)


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    delta_theta: float = 1e-8
    tol_rest: float = 1e-10
    max_step: float = np.inf
    stop_at_rest: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> IntegratorOptions:
        return cls(**d)


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    state: CharacteristicState


@dataclass(frozen=True)
class Outcome:
    """Final classification of a run."""

    kind: str  # "rest" | "decaying" | "lightspeed" | "span_ended"
    value: float | None = None

    def verdict(self) -> str:
        if self.kind == "rest":
            return f"REST({self.value:.6g})"
        if self.kind == "decaying":
            return f"DECAYING({self.value:.6g})"
        if self.kind == "lightspeed":
            return f"LIGHTSPEED({self.value:.10g})"
        return "SPAN_ENDED"


@dataclass
class SolveResult:
    t: np.ndarray
    y: np.ndarray  # rows d, b, theta
    events: list[Event]
    outcome: Outcome
    params: PhysicalParams
    radiation_exit: float | None = None
    segments: list = field(default_factory=list, repr=False)

    def __call__(self, t):
        """Dense state ``(d, b, theta)`` at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        starts = np.array([s.t_min for s in self.segments])
        idx = np.clip(np.searchsorted(starts, flat, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((3, flat.size))
        for k in np.unique(idx):
            m = idx == k
            out[:, m] = self.segments[k](flat[m])
        return out[:, 0] if t.ndim == 0 else out

    def theta_at(self, t):
        return self(t)[2]

    def q_at(self, t):
        y = self(t)
        return 0.5 * (y[0] + y[1])

    def state_at(self, t: float) -> CharacteristicState:
        d, b, th = self(float(t))
        return CharacteristicState(float(t), float(d), float(b), float(th))

    @property
    def path(self) -> list[CharacteristicState]:
        return [CharacteristicState(float(t), *map(float, self.y[:, i])) for i, t in enumerate(self.t)]

    @property
    def q(self) -> np.ndarray:
        return 0.5 * (self.y[0] + self.y[1])

    @property
    def qdot(self) -> np.ndarray:
        return np.sin(self.y[2])

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def time_at_b(self, b_target: float) -> float:
        """First time with ``b = b_target`` (``b`` is nonincreasing)."""
        if not (self.y[1, -1] <= b_target <= self.y[1, 0]):
            raise ValueError(f"b = {b_target} not reached in [{self.t[0]}, {self.t[-1]}]")
        i = int(np.argmax(self.y[1] <= b_target))
        if i == 0:
            return float(self.t[0])
        lo, hi = float(self.t[i - 1]), float(self.t[i])
        return brentq(lambda s: self(s)[1] - b_target, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def theta_at_b(self, b_target: float) -> float:
        return float(self.theta_at(self.time_at_b(b_target)))


def rhs_sys3(params: PhysicalParams, profiles: ProfilePair, state: CharacteristicState):
    s = math.sin(state.theta)
    c2 = math.cos(state.theta) ** 2
    drive = profiles.F(state.d) + profiles.G(state.b)
    th = params.a / (2 * params.m) * drive * c2 - params.self_rate * s
    return s + 1.0, s - 1.0, th


def _make_rhs(params: PhysicalParams, profiles: ProfilePair) -> Callable:
    F, G = profiles.F, profiles.G
    k_drive = params.a / (2 * params.m)
    k_self = params.self_rate

    def fun(t, y):
        d, b, th = y
        s = math.sin(th)
        c = math.cos(th)
        return [s + 1.0, s - 1.0, k_drive * (F(d) + G(b)) * c * c - k_self * s]

    return fun


def _radiation_done(profiles: ProfilePair, d: float, b: float) -> bool:
    fs, gs = profiles.F.support, profiles.G.support
    # same 1e-12 slack as the edge filter in integrate()
    return (fs is None or d >= fs[1] - 1e-12) and (gs is None or b <= gs[0] + 1e-12)


def integrate(
    params: PhysicalParams,
    profiles: ProfilePair,
    init: CharacteristicState | None = None,
    span: tuple[float, float] = (0.0, 60.0),
    opts: IntegratorOptions | None = None,
) -> SolveResult:
    """Integrate the characteristic system, restarting at every profile edge.

    Segment boundaries sit on the support endpoints of ``F`` (crossed by ``d``)
    and ``G`` (crossed by ``b``) so no step straddles a loss of smoothness.
    """
    opts = opts or IntegratorOptions()
    init = init or CharacteristicState.initial()
    t0, t_end = float(span[0]), float(span[1])
    if init.t != t0:
        raise ValueError("initial state time must equal the span start")
    lim = HALF_PI - opts.delta_theta
    if abs(init.theta) >= lim:
        raise LightSpeedError("initial angle is already at the light-speed margin")

    fun = _make_rhs(params, profiles)
    d_edges = profiles.F.breakpoints
    b_edges = profiles.G.breakpoints

    def lightspeed(t, y):
        return lim - abs(y[2])

    lightspeed.terminal = True
    lightspeed.direction = -1

    def rest(t, y):
        return abs(y[2]) - opts.tol_rest

    rest.terminal = opts.stop_at_rest
    rest.direction = -1

    t, y = t0, np.array([init.d, init.b, init.theta], dtype=float)
    segments, ts, ys = [], [np.array([t0])], [y[:, None]]
    events: list[Event] = []
    exit_t = t0 if _radiation_done(profiles, y[0], y[1]) else None
    rest_seen = False
    outcome = None

    while t < t_end:
        done = _radiation_done(profiles, y[0], y[1])
        evs: list = [lightspeed]
        kinds = ["lightspeed"]
        for e in d_edges:
            if e > y[0] + 1e-12:
                fn = _level_event(0, e, +1)
                evs.append(fn)
                kinds.append("F_edge")
        for e in b_edges:
            if e < y[1] - 1e-12:
                fn = _level_event(1, e, -1)
                evs.append(fn)
                kinds.append("G_edge")
        if done and not rest_seen:
            if abs(y[2]) < opts.tol_rest:
                rest_seen = True
                events.append(Event("rest", t, _cstate(t, y)))
                if opts.stop_at_rest and segments:
                    break
            else:
                evs.append(rest)
                kinds.append("rest")

        sol = solve_ivp(
            fun,
            (t, t_end),
            y,
            method=opts.method,
            rtol=opts.rtol,
            atol=opts.atol,
            dense_output=True,
            events=evs,
            max_step=opts.max_step,
        )
        if sol.status == -1:
            raise IntegrationError(f"integrator failed: {sol.message}", t=float(sol.t[-1]), state=sol.y[:, -1])
        segments.append(sol.sol)
        ts.append(sol.t[1:])
        ys.append(sol.y[:, 1:])

        stop_kind = None
        for kind, te, ye in zip(kinds, sol.t_events, sol.y_events):
            for tk, yk in zip(te, ye):
                if kind == "rest":
                    if not rest_seen:
                        rest_seen = True
                        events.append(Event("rest", float(tk), _cstate(tk, yk)))
                else:
                    events.append(Event(kind, float(tk), _cstate(tk, yk)))
                if sol.status == 1 and tk == sol.t[-1] and (kind != "rest" or opts.stop_at_rest):
                    stop_kind = kind
        t, y = float(sol.t[-1]), sol.y[:, -1].copy()
        if exit_t is None and _radiation_done(profiles, y[0], y[1]):
            exit_t = t
            events.append(Event("radiation_end", t, _cstate(t, y)))
        if sol.status == 0 or stop_kind in ("lightspeed", "rest"):
            if stop_kind == "lightspeed":
                outcome = Outcome("lightspeed", t)
            break

    events.sort(key=lambda e: e.t)
    result = SolveResult(
        t=np.concatenate(ts),
        y=np.concatenate(ys, axis=1),
        events=events,
        outcome=Outcome("span_ended"),
        params=params,
        radiation_exit=exit_t,
        segments=segments,
    )
    result.outcome = outcome or _classify(result, opts)
    return result


def _level_event(component: int, level: float, direction: int):
    def ev(t, y):
        return y[component] - level

    ev.terminal = True
    ev.direction = direction
    return ev


def _cstate(t, y) -> CharacteristicState:
    return CharacteristicState(float(t), float(y[0]), float(y[1]), float(y[2]))


def _classify(result: SolveResult, opts: IntegratorOptions) -> Outcome:
    rests = result.events_of("rest")
    if opts.stop_at_rest and rests:
        return Outcome("rest", rests[0].state.theta)
    if result.radiation_exit is None:
        return Outcome("span_ended")
    theta_exit = float(result.theta_at(result.radiation_exit))
    if abs(theta_exit) <= opts.tol_rest:
        return Outcome("rest", float(result.y[2, -1]))
    if result.params.m > 0:
        return Outcome("decaying", fit_decay_rate(result, opts.tol_rest))
    return Outcome("span_ended")


def fit_decay_rate(result: SolveResult, tol_rest: float = 1e-10, n: int = 400) -> float:
    """Log-linear least-squares rate of ``|theta|`` on the last half of the post-radiation arc."""
    t_start = result.radiation_exit
    if t_start is None:
        raise ValueError("radiation never ends inside the span")
    rests = [e.t for e in result.events_of("rest") if e.t >= t_start]
    t_stop = rests[0] if rests else float(result.t[-1])
    if t_stop <= t_start:
        raise ValueError("empty post-radiation arc")
    tt = np.linspace(t_start + 0.5 * (t_stop - t_start), t_stop, n)
    th = np.abs(result.theta_at(tt))
    keep = th > 0
    slope, _ = np.polyfit(tt[keep], np.log(th[keep]), 1)
    return float(-slope)


# ---------------------------------------------------------------------------
# Closed-form free motion
# ---------------------------------------------------------------------------


def blowup_time(params: PhysicalParams, t0: float, theta0: float) -> float:
    """Time at which the free angle reaches ``+-pi/2``; ``inf`` if it never does."""
    if params.m > 0 or theta0 == 0:
        return math.inf
    c2 = abs(1 / math.sin(theta0) + 1 / math.tan(theta0))
    return t0 + 2 * params.abs_m / params.a**2 * math.log(c2)


def theta_closed_norad(params: PhysicalParams, t0: float, theta0: float, t):
    """Free-motion angle (no radiation) from ``theta(t0) = theta0``.

    ``csc(theta) + cot(theta) = cot(theta/2)`` scales like ``exp(a^2 (t - t0) / 2m)``,
    so ``theta(t) = 2 arctan(tan(theta0 / 2) exp(-a^2 (t - t0) / 2m))``.
    """
    if abs(theta0) >= HALF_PI:
        raise LightSpeedError("initial angle at or beyond the light-speed boundary")
    t_arr = np.asarray(t, dtype=float)
    if theta0 == 0:
        return 0.0 if t_arr.ndim == 0 else np.zeros_like(t_arr)
    t1 = blowup_time(params, t0, theta0)
    if np.any(t_arr > t1):
        raise LightSpeedError(f"light speed is reached at t = {t1!r}")
    out = 2 * np.arctan(math.tan(0.5 * theta0) * np.exp(-params.self_rate * (t_arr - t0)))
    return float(out) if t_arr.ndim == 0 else out


def norad_invariant(params: PhysicalParams, t, theta):
    """``(csc theta + cot theta) exp(-a^2 t / 2m)``; constant on free arcs."""
    theta = np.asarray(theta, dtype=float)
    return (1 / np.sin(theta) + 1 / np.tan(theta)) * np.exp(-params.self_rate * np.asarray(t))


# ---------------------------------------------------------------------------
# Reverse flow in the (b, theta) plane
# ---------------------------------------------------------------------------


def reverse_flow_rhs(params: PhysicalParams, profiles: ProfilePair, state: CharacteristicState):
    """Time-reversed ``(b, theta)`` system with ``F = 0``."""
    s = math.sin(state.theta)
    c2 = math.cos(state.theta) ** 2
    return 1.0 - s, -params.a / (2 * params.m) * profiles.G(state.b) * c2 + params.self_rate * s


def flow_bt(
    params: PhysicalParams,
    G: SmoothFunction,
    b0: float,
    theta0: float,
    duration: float,
    reverse: bool = False,
    rtol: float = 1e-12,
    atol: float = 1e-14,
):
    """Flow ``(b, theta)`` forward (or reversed) for ``duration``; returns the end state."""
    sign = -1.0 if reverse else 1.0
    k_drive = params.a / (2 * params.m)
    k_self = params.self_rate

    def fun(t, y):
        b, th = y
        s = math.sin(th)
        c = math.cos(th)
        return [sign * (s - 1.0), sign * (k_drive * G(b) * c * c - k_self * s)]

    sol = solve_ivp(fun, (0.0, duration), [b0, theta0], method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return float(sol.y[0, -1]), float(sol.y[1, -1])


# ---------------------------------------------------------------------------
# Sensitivity of the backward map
# ---------------------------------------------------------------------------


def lemma1_flow(params: PhysicalParams, beta: float, rtol: float = 1e-12, atol: float = 1e-16) -> float:
    """``y_beta(1)`` for ``dy/dx = (a/2|m|)(1 + sin y)(beta sin(pi x) - a sec y tan y)``, ``y(-1) = 0``."""
    params.require_positive_charge()
    a, k = params.a, params.a / (2 * params.abs_m)
    lim = HALF_PI - 1e-8

    def fun(x, y):
        yy = y[0]
        c = math.cos(yy)
        return [k * (1 + math.sin(yy)) * (beta * math.sin(math.pi * x) - a * math.tan(yy) / c)]

    def edge(x, y):
        return lim - abs(y[0])

    edge.terminal = True
    sol = solve_ivp(fun, (-1.0, 1.0), [0.0], method="DOP853", rtol=rtol, atol=atol, events=edge)
    if sol.status == 1:
        raise LightSpeedError(f"|y| reached pi/2 at x = {sol.t[-1]!r}")
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return float(sol.y[0, -1])


def sensitivity_closed(params: PhysicalParams) -> float:
    a, am = params.a, params.abs_m
    return 2 * math.pi * a * am * (-math.expm1(-(a**2) / am)) / (4 * math.pi**2 * am**2 + a**4)


def sensitivity_quadrature(params: PhysicalParams) -> float:
    c = params.a / (2 * params.abs_m)
    k = params.a**2 / (2 * params.abs_m)
    # sine-weighted rule; the integral nearly cancels for small k, hence the absolute floor
    val, _ = quad(lambda t: math.exp(k * (t - 1)), -1.0, 1.0, weight="sin", wvar=math.pi, epsabs=1e-14, epsrel=1e-12)
    return c * val


def sensitivity_ode(params: PhysicalParams) -> float:
    c = params.a / (2 * params.abs_m)
    k = params.a**2 / (2 * params.abs_m)
    sol = solve_ivp(
        lambda x, z: [c * math.sin(math.pi * x) - k * z[0]],
        (-1.0, 1.0),
        [0.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-16,
    )
    return float(sol.y[0, -1])


@dataclass(frozen=True)
class SensitivityReport:
    closed: float
    quadrature: float
    ode: float

    @property
    def value(self) -> float:
        return self.closed

    @property
    def spread(self) -> float:
        vals = (self.closed, self.quadrature, self.ode)
        return max(vals) - min(vals)


def sensitivity_Z(params: PhysicalParams, tol: float = 1e-8) -> SensitivityReport:
    """``dy_beta(1)/dbeta`` at ``beta = 0`` by closed form, quadrature and the variational ODE."""
    params.require_positive_charge()
    rep = SensitivityReport(sensitivity_closed(params), sensitivity_quadrature(params), sensitivity_ode(params))
    if rep.spread > tol * max(1.0, abs(rep.closed)):
        raise ConsistencyError(f"sensitivity routes disagree: {rep}")
    return rep


def exit_angle_slope(params: PhysicalParams) -> float:
    """First-order coefficient of the forward exit angle ``theta(b=-3) / beta``.

    The forward solution starting from ``(b, theta) = (-1, 0)`` solves the same
    linearized equation in ``x = b + 2`` as the backward one, but from the
    other endpoint, which rescales ``Z(1, 0)`` by ``exp(a^2 / |m|)``.
    """
    return -math.exp(params.a**2 / params.abs_m) * sensitivity_closed(params)


# ---------------------------------------------------------------------------
# Unreduced (q, p) equations
# ---------------------------------------------------------------------------


@dataclass
class QPSolution:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    sol: Callable = field(repr=False)
    stopped_at_limit: bool = False


def integrate_qp(
    params: PhysicalParams,
    pulse: RadiationPulse,
    span: tuple[float, float],
    theta_limit: float = HALF_PI - 1e-3,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    breaks: list[float] | None = None,
) -> QPSolution:
    """Integrate ``q' = p / (m sqrt(1 + p^2/m^2))``, ``p' = f(t, q, q')`` directly.

    ``breaks`` are times where the force loses smoothness; integration restarts
    there.  Stops once ``|theta|`` exceeds ``theta_limit``.
    """
    from .force import force_closed

    m = params.m
    p_lim = abs(p_from_theta(theta_limit, 1.0))

    def fun(t, y):
        q, p = y
        r = p / m
        qdot = r / math.sqrt(1 + r * r)
        return [qdot, force_closed(params, pulse, t, q, qdot)]

    def limit(t, y):
        return p_lim - abs(y[1] / m)

    limit.terminal = True
    limit.direction = -1

    t0, t1 = span
    cuts = [t0] + sorted(b for b in (breaks or []) if t0 < b < t1) + [t1]
    y = np.array([0.0, 0.0])
    ts, qs, ps, sols = [np.array([t0])], [np.array([0.0])], [np.array([0.0])], []
    stopped = False
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sol = solve_ivp(fun, (lo, hi), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True, events=limit)
        if sol.status == -1:
            raise IntegrationError(sol.message, t=float(sol.t[-1]), state=sol.y[:, -1])
        sols.append(sol.sol)
        ts.append(sol.t[1:])
        qs.append(sol.y[0, 1:])
        ps.append(sol.y[1, 1:])
        y = sol.y[:, -1]
        if sol.status == 1:
            stopped = True
            break

    starts = np.array([s.t_min for s in sols])

    def dense(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(sols) - 1)
        out = np.empty((2, t.size))
        for k in np.unique(idx):
            mk = idx == k
            out[:, mk] = sols[k](t[mk])
        return out

    return QPSolution(np.concatenate(ts), np.concatenate(qs), np.concatenate(ps), dense, stopped)
