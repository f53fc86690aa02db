"""Closed-form field of the particle plus incoming radiation.

For a given subluminal path ``q(t)`` starting at rest at the origin the field
splits as ``u = w + V``.  ``V`` is the free d'Alembert evolution of the
radiation data and ``w`` the singular part,

    w = (a/2) * {  s                s < -t
                   T+(s + t) - t    -t < s < q(t)
                   T-(s - t) - t    q(t) < s < t
                  -s                s > t },

where ``T+`` and ``T-`` invert ``tau -> q(tau) + tau`` and ``tau -> q(tau) - tau``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .model import LightSpeedError, OutOfDomainError, RadiationPulse, RootFindingError

TOL_ROOT = 1e-12
DELTA_V = 1e-6

# branch labels of the piecewise field
OUTSIDE_LEFT, PLUS_BRANCH, MINUS_BRANCH, OUTSIDE_RIGHT = 0, 1, 2, 3


class Trajectory:
    """C^1 particle path: cubic Hermite interpolant through ``(t, q, qdot)`` knots."""

    def __init__(self, t, q, qdot, delta_v: float = DELTA_V):
        t = np.asarray(t, dtype=float)
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        if t.ndim != 1 or t.size < 2 or q.shape != t.shape or qdot.shape != t.shape:
            raise ValueError("need at least two (t, q, qdot) knots of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knot times must be strictly increasing")
        vmax = float(np.max(np.abs(qdot)))
        if vmax > 1 - delta_v:
            raise LightSpeedError(f"trajectory reaches |qdot| = {vmax:.12g} > 1 - {delta_v:g}")
        self.t, self.q_knots, self.qdot_knots = t, q, qdot
        self.delta_v = delta_v
        self._spline = CubicHermiteSpline(t, q, qdot)
        self._dspline = self._spline.derivative()
        # knot values of tau + q(tau) and tau - q(tau); both strictly increasing
        self._h = {+1: t + q, -1: t - q}

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_function(cls, q, qdot, t_end: float, n: int = 2001, delta_v: float = DELTA_V) -> Trajectory:
        t = np.linspace(0.0, t_end, n)
        return cls(t, q(t), qdot(t), delta_v)

    @classmethod
    def static(cls, t_end: float) -> Trajectory:
        t = np.array([0.0, t_end])
        return cls(t, np.zeros(2), np.zeros(2))

    @classmethod
    def from_solve(cls, result, dt: float = 0.01, delta_v: float = DELTA_V) -> Trajectory:
        """Sample a dynamics ``SolveResult`` densely, truncating before ``|qdot| > 1 - delta_v``."""
        t0, t1 = result.t[0], result.t[-1]
        grid = np.union1d(np.linspace(t0, t1, max(2, int(math.ceil((t1 - t0) / dt)) + 1)), result.t)
        theta = result.theta_at(grid)
        qdot = np.sin(theta)
        bad = np.nonzero(np.abs(qdot) > 1 - delta_v)[0]
        if bad.size:
            i = bad[0]
            if i == 0:
                raise LightSpeedError("trajectory starts above the light-speed margin")
            lim = math.asin(1 - delta_v)
            t_cut = brentq(lambda s: abs(result.theta_at(s)) - lim, grid[i - 1], grid[i], xtol=1e-14)
            # keep the cut strictly inside the margin
            t_cut = grid[i - 1] + (t_cut - grid[i - 1]) * (1 - 1e-9)
            grid = np.append(grid[:i], t_cut) if t_cut > grid[i - 1] else grid[:i]
            theta = result.theta_at(grid)
            qdot = np.sin(theta)
        return cls(grid, result.q_at(grid), qdot, delta_v)

    # -- evaluation ---------------------------------------------------------

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def starts_at_rest(self) -> bool:
        return self.t[0] == 0.0 and self.q_knots[0] == 0.0 and self.qdot_knots[0] == 0.0

    def q(self, t):
        self._check_span(t)
        v = self._spline(t)
        return float(v) if np.ndim(t) == 0 else v

    def qdot(self, t):
        self._check_span(t)
        v = self._dspline(t)
        return float(v) if np.ndim(t) == 0 else v

    def _check_span(self, t):
        tmin, tmax = np.min(t), np.max(t)
        slack = 1e-12 * max(1.0, abs(self.t_end))
        if tmin < self.t[0] - slack or tmax > self.t[-1] + slack:
            raise OutOfDomainError(f"time outside trajectory span [{self.t[0]}, {self.t[-1]}]")

    # -- retarded time ------------------------------------------------------

    def invert(self, x, sign: int):
        """Solve ``tau + sign * q(tau) = x`` for ``tau`` (vectorized).

        Each knot interval holds one cubic; the root is bracketed by the
        monotone knot values and refined by safeguarded Newton steps.
        """
        h = self._h[sign]
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        slack = 1e-12 * max(1.0, abs(h[-1]))
        if np.any(x < h[0] - slack) or np.any(x > h[-1] + slack):
            raise OutOfDomainError(
                f"x outside attained range [{h[0]:.6g}, {h[-1]:.6g}] of tau {'+' if sign > 0 else '-'} q(tau)"
            )
        x = np.clip(x, h[0], h[-1])
        idx = np.clip(np.searchsorted(h, x, side="right") - 1, 0, self.t.size - 2)
        origin = self.t[idx]
        lo = origin.copy()
        hi = self.t[idx + 1].copy()
        c = self._spline.c[:, idx]

        def g(tau):
            z = tau - origin
            qv = ((c[0] * z + c[1]) * z + c[2]) * z + c[3]
            dq = (3 * c[0] * z + 2 * c[1]) * z + c[2]
            return tau + sign * qv - x, 1 + sign * dq

        # linear guess between knot values
        frac = (x - h[idx]) / (h[idx + 1] - h[idx])
        tau = lo + frac * (hi - lo)
        for _ in range(100):
            r, dr = g(tau)
            done = np.abs(r) <= 1e-2 * TOL_ROOT
            if np.all(done):
                break
            # residual is increasing in tau: its sign tells which side the root is on
            hi = np.where(r > 0, tau, hi)
            lo = np.where(r < 0, tau, lo)
            step = tau - r / dr
            bad = (step <= lo) | (step >= hi) | ~np.isfinite(step)
            new = np.where(bad, 0.5 * (lo + hi), step)
            stalled = np.abs(new - tau) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(tau))
            tau = np.where(done, tau, new)
            if np.all(done | stalled):
                break
        r, _ = g(tau)
        if np.any(np.abs(r) > 1e-10):
            worst = int(np.argmax(np.abs(r)))
            raise RootFindingError(
                f"retarded time did not converge: x={x[worst]!r}, tau={tau[worst]!r}, "
                f"residual={r[worst]:.3e}, bracket=[{lo[worst]!r}, {hi[worst]!r}]"
            )
        return float(tau[0]) if scalar else tau


def retarded_time_plus(traj: Trajectory, x):
    """``T+(x)``: the ``tau`` with ``q(tau) + tau = x``."""
    return traj.invert(x, +1)


def retarded_time_minus(traj: Trajectory, x):
    """``T-(x)``: the ``tau`` with ``q(tau) - tau = x``."""
    return traj.invert(-np.asarray(x, dtype=float) if np.ndim(x) else -x, -1)


# ---------------------------------------------------------------------------
# Free radiation
# ---------------------------------------------------------------------------


def eval_V(pulse: RadiationPulse, t, s):
    """d'Alembert solution ``(V, V_t, V_s)`` for the radiation data."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    xp, xm = s + t, s - t
    v0, v1 = pulse.v0, pulse.v1
    dv0 = v0.derivative()
    V = 0.5 * (v0(xm) + v0(xp)) + 0.5 * v1.integral(xm, xp)
    V_s = 0.5 * (dv0(xp) + dv0(xm) + v1(xp) - v1(xm))
    V_t = 0.5 * (dv0(xp) - dv0(xm) + v1(xp) + v1(xm))
    if np.ndim(V) == 0:
        return float(V), float(V_t), float(V_s)
    return V, V_t, V_s


# ---------------------------------------------------------------------------
# Full field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSample:
    """Field value and one-sided derivatives at ``(t, s)``.

    Left/right are the limits ``s -> s-`` and ``s -> s+``; they differ only on
    the particle path (and, in principle, on the light cone ``s = +-t``).
    """

    t: float
    s: float
    u: float
    u_t_left: float
    u_t_right: float
    u_s_left: float
    u_s_right: float
    u_left: float | None = None
    u_right: float | None = None

    @property
    def u_t(self) -> float:
        return self.u_t_left

    @property
    def u_s(self) -> float:
        return self.u_s_left


def _branch_left(t, s, qt):
    return np.where(s <= -t, OUTSIDE_LEFT, np.where(s <= qt, PLUS_BRANCH, np.where(s <= t, MINUS_BRANCH, OUTSIDE_RIGHT)))


def _branch_right(t, s, qt):
    return np.where(s < -t, OUTSIDE_LEFT, np.where(s < qt, PLUS_BRANCH, np.where(s < t, MINUS_BRANCH, OUTSIDE_RIGHT)))


def singular_part(a: float, traj: Trajectory, t, s, branch):
    """``(w, w_t, w_s)`` of the given branch at points ``(t, s)`` (arrays broadcast)."""
    t, s, branch = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float), np.asarray(branch))
    w = np.empty(t.shape)
    wt = np.zeros(t.shape)
    ws = np.empty(t.shape)
    half = 0.5 * a

    m = branch == OUTSIDE_LEFT
    w[m] = half * s[m]
    ws[m] = half

    m = branch == OUTSIDE_RIGHT
    w[m] = -half * s[m]
    ws[m] = -half

    m = branch == PLUS_BRANCH
    if np.any(m):
        tau = traj.invert(s[m] + t[m], +1)
        v = traj.qdot(tau)
        w[m] = half * (tau - t[m])
        ws[m] = half / (v + 1)
        wt[m] = -half * v / (v + 1)

    m = branch == MINUS_BRANCH
    if np.any(m):
        tau = traj.invert(t[m] - s[m], -1)
        v = traj.qdot(tau)
        w[m] = half * (tau - t[m])
        ws[m] = half / (v - 1)
        wt[m] = -half * v / (v - 1)
    return w, wt, ws


def field_arrays(a: float, traj: Trajectory, pulse: RadiationPulse, t, s, side: str = "left"):
    """Vectorized ``(u, u_t, u_s)`` taking the ``side`` limit on branch boundaries."""
    t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
    _require_causal(traj, t)
    qt = traj.q(t)
    branch = _branch_left(t, s, qt) if side == "left" else _branch_right(t, s, qt)
    w, wt, ws = singular_part(a, traj, t, s, branch)
    V, Vt, Vs = eval_V(pulse, t, s)
    return w + V, wt + Vt, ws + Vs


def _require_causal(traj: Trajectory, t):
    if not (traj.t[0] == 0.0 and traj.q_knots[0] == 0.0):
        raise ValueError("field formula needs a path starting at q(0) = 0")
    if np.any(np.asarray(t) < 0):
        raise OutOfDomainError("field is only constructed for t >= 0")


def eval_field(a: float, traj: Trajectory, pulse: RadiationPulse, t: float, s: float) -> FieldSample:
    """Field with both one-sided derivative limits at ``(t, s)``."""
    t = float(t)
    s = float(s)
    _require_causal(traj, t)
    qt = traj.q(t)
    bl = int(_branch_left(t, s, qt))
    br = int(_branch_right(t, s, qt))
    wl, wtl, wsl = singular_part(a, traj, t, s, bl)
    if br == bl:
        wr, wtr, wsr = wl, wtl, wsl
    else:
        wr, wtr, wsr = singular_part(a, traj, t, s, br)
    V, Vt, Vs = eval_V(pulse, t, s)
    ul, ur = float(wl) + V, float(wr) + V
    return FieldSample(
        t=t,
        s=s,
        u=0.5 * (ul + ur),
        u_t_left=float(wtl) + Vt,
        u_t_right=float(wtr) + Vt,
        u_s_left=float(wsl) + Vs,
        u_s_right=float(wsr) + Vs,
        u_left=ul,
        u_right=ur,
    )


# ---------------------------------------------------------------------------
# Jumps and regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpSet:
    """Jumps (right minus left) of singular-part quantities across the path."""

    ws: float
    wt: float
    ws_wt: float
    ws2: float
    wt2: float


def jump_quantities(a: float, qdot: float) -> JumpSet:
    if abs(qdot) >= 1:
        raise LightSpeedError(f"jumps diverge at |qdot| = {abs(qdot)}")
    D = qdot * qdot - 1
    return JumpSet(
        ws=a / D,
        wt=-a * qdot / D,
        ws_wt=-(a**2) * qdot**2 / D**2,
        ws2=a**2 * qdot / D**2,
        wt2=a**2 * qdot**3 / D**2,
    )


@dataclass(frozen=True)
class LightConeResidual:
    t: float
    us_left_cone: float
    ut_left_cone: float
    us_right_cone: float
    ut_right_cone: float

    @property
    def max(self) -> float:
        return max(self.us_left_cone, self.ut_left_cone, self.us_right_cone, self.ut_right_cone)


def check_C1_lightcone(a: float, traj: Trajectory, pulse: RadiationPulse, t: float) -> LightConeResidual:
    """Derivative jumps of ``u`` across ``s = -t`` and ``s = t``."""
    if t <= 0:
        raise ValueError("light-cone check needs t > 0")
    lo = eval_field(a, traj, pulse, t, -t)
    hi = eval_field(a, traj, pulse, t, t)
    return LightConeResidual(
        t=t,
        us_left_cone=abs(lo.u_s_right - lo.u_s_left),
        ut_left_cone=abs(lo.u_t_right - lo.u_t_left),
        us_right_cone=abs(hi.u_s_right - hi.u_s_left),
        ut_right_cone=abs(hi.u_t_right - hi.u_t_left),
    )


def write_snapshot_csv(path, a: float, traj: Trajectory, pulse: RadiationPulse, t: float, s_grid) -> Path:
    """Rows ``(t, s, u, u_t, u_s)``; derivatives are left limits on the path."""
    s_grid = np.asarray(s_grid, dtype=float)
    u, ut, us = field_arrays(a, traj, pulse, np.full_like(s_grid, t), s_grid)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "s", "u", "u_t", "u_s"])
        for row in zip(np.full_like(s_grid, t), s_grid, u, ut, us):
            w.writerow([repr(float(v)) for v in row])
    return path
