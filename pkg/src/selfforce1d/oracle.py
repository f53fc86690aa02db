"""Brute-force checks that do not rely on the closed-form field.

* a leapfrog finite-difference solver for the wave equation with the point
  source replaced by a compact C^2 mollifier following the path;
* momentum balance over a thin tube around the path, integrated by
  composite Gauss-Legendre quadrature on the analytic field;
* energy in a window of the field.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .field import Trajectory, eval_V, field_arrays
from .force import self_force
from .model import OutOfDomainError, RadiationPulse

_GL_NODES, _GL_WEIGHTS = leggauss(16)
_MOLLIFIER_MASS = 32.0 / 35.0  # integral of (1 - r^2)^3 over [-1, 1]


def mollified_delta(eps: float, center: float, s, h: float | None = None):
    """C^2 bump ``(1 - r^2)^3`` of half-width ``eps`` with unit mass.

    Without ``h`` the continuous mass is one.  With ``h``, ``s`` is taken to be
    a uniform grid and the result is rescaled to unit discrete mass.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = np.asarray(s, dtype=float)
    r = (s - center) / eps
    phi = np.where(np.abs(r) < 1, (1 - r * r) ** 3, 0.0) / (eps * _MOLLIFIER_MASS)
    if h is not None:
        mass = phi.sum() * h
        if mass == 0:
            raise ValueError("mollifier support misses the grid")
        phi = phi / mass
    return phi


@dataclass(frozen=True)
class FDGrid:
    h: float
    k: float
    s_min: float
    s_max: float
    eps_delta: float

    def __post_init__(self):
        if self.k > self.h:
            raise ValueError(f"CFL violated: k = {self.k} > h = {self.h}")
        if self.eps_delta < 4 * self.h * (1 - 1e-12):
            raise ValueError("mollifier must span at least 4 grid cells")
        if self.s_max <= self.s_min:
            raise ValueError("empty domain")

    @classmethod
    def padded(cls, h: float, eps_delta: float, window: float, t_end: float, cfl: float = 0.9) -> FDGrid:
        """Domain ``[-window - 2 t_end, window + 2 t_end]`` aligned so ``s = 0`` is a node."""
        half = math.ceil((window + 2 * t_end) / h) * h
        n_steps = max(1, math.ceil(t_end / (cfl * h)))
        return cls(h=h, k=t_end / n_steps, s_min=-half, s_max=half, eps_delta=eps_delta)

    @property
    def s(self) -> np.ndarray:
        n = int(round((self.s_max - self.s_min) / self.h)) + 1
        return self.s_min + self.h * np.arange(n)


@dataclass
class FDResult:
    grid: FDGrid
    t: float
    s: np.ndarray
    u: np.ndarray
    energy_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    energy: np.ndarray = field(default_factory=lambda: np.empty(0))


def _laplacian(u: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / (h * h)
    out = np.zeros_like(u)
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / (h * h)
    return out


def fd_wave_solve(
    a: float,
    pulse: RadiationPulse,
    traj: Trajectory | None,
    grid: FDGrid,
    t_end: float,
    boundary: str = "outflow",
    track_energy: bool = False,
) -> FDResult:
    """Leapfrog solution of ``u_tt - u_ss = a phi_eps(s - q(t))`` up to ``t_end``.

    The initial kink is the discrete static profile of the mollified source,
    which coincides with ``-(a/2)|s|`` outside ``|s| < eps``.  Outflow edges
    apply first-order upwind extrapolation to ``u + (a/2)|s|``.
    """
    periodic = boundary == "periodic"
    if periodic and a != 0:
        raise ValueError("periodic boundaries only make sense without the source")
    if boundary not in ("outflow", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    h, eps = grid.h, grid.eps_delta
    n_steps = int(round(t_end / grid.k))
    if not math.isclose(n_steps * grid.k, t_end, rel_tol=1e-12):
        raise ValueError("t_end must be a whole number of time steps")
    k = grid.k
    r2 = (k / h) ** 2
    s = grid.s
    if periodic:
        s = s[:-1]

    times = k * np.arange(n_steps + 1)
    if a != 0:
        if traj is None or traj.t_end < t_end - 1e-12:
            raise OutOfDomainError("trajectory must cover [0, t_end]")
        qs = traj.q(np.minimum(times, traj.t_end))
        margin = 2 * eps + 2 * h
        if np.any(qs < s[0] + margin) or np.any(qs > s[-1] - margin):
            raise OutOfDomainError("particle leaves the grid interior")
    else:
        qs = np.zeros_like(times)

    def source(q):
        if a == 0:
            return 0.0
        lo = np.searchsorted(s, q - eps)
        hi = np.searchsorted(s, q + eps, side="right")
        out = np.zeros_like(s)
        out[lo:hi] = mollified_delta(eps, q, s[lo:hi], h)
        return a * out

    static = -0.5 * a * np.abs(s)
    if a != 0:
        phi0 = source(0.0) / a
        j = np.nonzero(phi0)[0]
        u0 = -0.5 * a * (np.abs(s[:, None] - s[None, j]) @ (phi0[j] * h))
    else:
        u0 = np.zeros_like(s)
    u0 = u0 + pulse.v0(s)

    lap0 = _laplacian(u0, h, periodic)
    u1 = u0 + k * pulse.v1(s) + 0.5 * k * k * (lap0 + source(qs[0]))
    if not periodic:
        _outflow(u1, u0, static, k / h)

    e_t, e_val = [], []
    u_prev, u = u0, u1
    for n in range(1, n_steps):
        u_next = 2 * u - u_prev + r2 * h * h * _laplacian(u, h, periodic) + k * k * source(qs[n])
        if not periodic:
            _outflow(u_next, u, static, k / h)
        if track_energy:
            e_t.append(times[n])
            e_val.append(_centered_energy(u_prev, u, u_next, k, h, periodic))
        u_prev, u = u, u_next
    if n_steps == 0:
        u = u0
    return FDResult(grid, t_end, s, u, np.array(e_t), np.array(e_val))


def _outflow(u_new, u_old, static, courant):
    z_old0 = u_old[0] - static[0]
    z_old1 = u_old[1] - static[1]
    u_new[0] = static[0] + z_old0 + courant * (z_old1 - z_old0)
    z_oldN = u_old[-1] - static[-1]
    z_oldM = u_old[-2] - static[-2]
    u_new[-1] = static[-1] + z_oldN - courant * (z_oldN - z_oldM)


def _centered_energy(u_prev, u, u_next, k, h, periodic) -> float:
    ut = (u_next - u_prev) / (2 * k)
    if periodic:
        us = (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
    else:
        us = np.gradient(u, h)
    return float(0.5 * h * np.sum(ut * ut + us * us))


def fd_error(a: float, traj: Trajectory, pulse: RadiationPulse, res: FDResult, window: float) -> float:
    """L-infinity gap to the analytic field on ``|s| <= window``.

    Excludes a ``3 eps`` tube around the particle and an ``eps + 5 h`` collar
    around ``s = +-t``, which carries the mollified initial kink.
    """
    t = res.t
    s = res.s
    eps, h = res.grid.eps_delta, res.grid.h
    q = traj.q(t) if a != 0 else 0.0
    collar = (eps if a != 0 else 0.0) + 5 * h
    mask = (np.abs(s) <= window) & (np.abs(s - q) > 3 * eps) & (np.abs(s - t) > collar) & (np.abs(s + t) > collar)
    if a == 0:
        exact = eval_V(pulse, np.full(mask.sum(), t), s[mask])[0]
    else:
        exact = field_arrays(a, traj, pulse, np.full(mask.sum(), t), s[mask])[0]
    return float(np.max(np.abs(res.u[mask] - exact)))


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    eps: float
    linf_error: float
    order_estimate: float | None


def convergence_study(
    a: float,
    traj: Trajectory,
    pulse: RadiationPulse,
    hs,
    t_end: float,
    window: float,
    eps_per_h: float = 8.0,
) -> list[ConvergenceRow]:
    rows: list[ConvergenceRow] = []
    for h in hs:
        eps = eps_per_h * h
        grid = FDGrid.padded(h, eps, window, t_end)
        res = fd_wave_solve(a, pulse, traj, grid, t_end)
        err = fd_error(a, traj, pulse, res, window)
        order = None
        if rows:
            prev = rows[-1]
            order = math.log(prev.linf_error / err) / math.log(prev.h / h)
        rows.append(ConvergenceRow(h, eps, err, order))
    return rows


def write_convergence_csv(path, rows: list[ConvergenceRow]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "eps", "Linf_error", "order_estimate"])
        for r in rows:
            w.writerow([r.h, r.eps, r.linf_error, "" if r.order_estimate is None else r.order_estimate])
    return path


# ---------------------------------------------------------------------------
# Quadrature on the analytic field
# ---------------------------------------------------------------------------


def _gauss(breaks, max_width: float):
    """Composite 16-point Gauss-Legendre nodes/weights on sorted break intervals."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((hi - lo) / max_width))
        edges = np.linspace(lo, hi, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * np.diff(edges)[:, None]
        nodes.append((mid + half * _GL_NODES).ravel())
        weights.append((half * _GL_WEIGHTS).ravel())
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _inside(vals, lo, hi):
    return [v for v in vals if lo < v < hi]


def _offset_crossings(traj: Trajectory, offset: float, levels, t1: float, t2: float):
    """Times where ``s = q(t) + offset`` meets the characteristics ``s +- t = c``."""
    out = []
    for c in levels:
        for sign in (+1, -1):
            try:
                out.append(float(traj.invert(sign * (c - offset), sign)))
            except (OutOfDomainError, ValueError):
                pass
    return _inside(out, t1, t2)


@dataclass(frozen=True)
class MomentumBalance:
    """Terms of the integrated momentum balance over a tube of half-width ``eps``.

    ``closure`` compares all four boundary terms with the force integral and
    vanishes for every ``eps``; ``residual`` drops the two end caps, as in the
    ``eps -> 0`` limit, and therefore decays like ``eps``.
    """

    eps: float
    endcaps: float
    sides: float
    force_integral: float

    @property
    def boundary_total(self) -> float:
        return self.endcaps + self.sides

    @property
    def closure(self) -> float:
        return abs(self.boundary_total - self.force_integral)

    @property
    def residual(self) -> float:
        return abs(self.sides - self.force_integral)


def momentum_balance(
    a: float, traj: Trajectory, pulse: RadiationPulse, t1: float, t2: float, eps: float, max_width: float = 0.02
) -> MomentumBalance:
    if not 0 <= t1 < t2 <= traj.t_end:
        raise OutOfDomainError("need 0 <= t1 < t2 within the trajectory span")
    gap = t1 - abs(traj.q(t1))
    if gap <= eps:
        raise OutOfDomainError(f"tube of half-width {eps} meets the light cone at t = {t1}")
    levels = pulse.breakpoints
    knots = _inside(list(traj.t), t1, t2)

    sides = 0.0
    for sign in (+1, -1):
        br = [t1, t2] + knots + _offset_crossings(traj, sign * eps, levels, t1, t2)
        tt, ww = _gauss(br, max_width)
        q = traj.q(tt)
        qd = traj.qdot(tt)
        _, ut, us = field_arrays(a, traj, pulse, tt, q + sign * eps)
        flux = qd * us * ut + 0.5 * (us * us + ut * ut)
        sides += -sign * float(np.dot(ww, flux))

    caps = 0.0
    for T, sgn in ((t2, +1), (t1, -1)):
        qT = traj.q(T)
        lo, hi = qT - eps, qT + eps
        br = [lo, qT, hi] + _inside([c + T for c in levels] + [c - T for c in levels], lo, hi)
        ss, ww = _gauss(br, max_width)
        left = ss < qT
        total = 0.0
        for side, m in (("left", left), ("right", ~left)):
            _, ut, us = field_arrays(a, traj, pulse, np.full(m.sum(), T), ss[m], side=side)
            total += float(np.dot(ww[m], us * ut))
        caps += sgn * total

    br = [t1, t2] + knots + _offset_crossings(traj, 0.0, levels, t1, t2)
    tt, ww = _gauss(br, max_width)
    _, _, Vs = eval_V(pulse, tt, traj.q(tt))
    f = a * Vs + self_force(a, traj.qdot(tt))
    return MomentumBalance(eps, caps, sides, float(np.dot(ww, f)))


def momentum_balance_residual(
    a: float, traj: Trajectory, pulse: RadiationPulse, t1: float, t2: float, eps: float
) -> float:
    return momentum_balance(a, traj, pulse, t1, t2, eps).residual


def energy_window(
    a: float,
    traj: Trajectory,
    pulse: RadiationPulse,
    t: float,
    window: tuple[float, float],
    tube: float = 0.0,
    max_width: float = 0.02,
) -> float:
    """Field energy ``int (u_t^2 + u_s^2)/2 ds`` over ``window`` at time ``t``.

    A tube of half-width ``tube`` around the particle is left out; with
    ``tube = 0`` the one-sided values on each side of the path are used.
    """
    lo, hi = window
    q = traj.q(t)
    levels = pulse.breakpoints
    br = [lo, hi] + _inside([-t, t, q] + [c + t for c in levels] + [c - t for c in levels], lo, hi)
    if tube > 0:
        br += _inside([q - tube, q + tube], lo, hi)
    ss, ww = _gauss(br, max_width)
    keep = np.abs(ss - q) > tube if tube > 0 else np.ones(ss.shape, bool)
    total = 0.0
    left = ss < q
    for side, m in (("left", left & keep), ("right", ~left & keep)):
        if not np.any(m):
            continue
        _, ut, us = field_arrays(a, traj, pulse, np.full(m.sum(), t), ss[m], side=side)
        total += float(np.dot(ww[m], 0.5 * (ut * ut + us * us)))
    return total
