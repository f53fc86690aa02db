"""Force on the particle from field momentum balance.

Two independent routes: ``force_jump`` forms the jumps of the field momentum
density and stress across the path from one-sided field derivatives, while
``force_closed`` uses the resulting closed form
``a V_s(t, q) - (a^2/2) qdot / (1 - qdot^2)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import FieldSample, Trajectory, eval_V, eval_field, jump_quantities
from .model import LightSpeedError, PhysicalParams, RadiationPulse


@dataclass(frozen=True)
class StressSample:
    pi: float
    tau: float
    eps: float


def stress_from(u_t, u_s) -> StressSample:
    """Momentum density ``u_s u_t``; stress and energy density both ``(u_s^2 + u_t^2)/2``."""
    e = 0.5 * (u_s * u_s + u_t * u_t)
    return StressSample(pi=u_s * u_t, tau=e, eps=e)


def stress(sample: FieldSample, side: str = "left") -> StressSample:
    if side == "left":
        return stress_from(sample.u_t_left, sample.u_s_left)
    if side == "right":
        return stress_from(sample.u_t_right, sample.u_s_right)
    raise ValueError("side must be 'left' or 'right'")


def self_force(a: float, qdot):
    qdot = np.asarray(qdot, dtype=float)
    if np.any(np.abs(qdot) >= 1):
        raise LightSpeedError("self-force diverges at |qdot| = 1")
    out = -0.5 * a * a * qdot / (1 - qdot * qdot)
    return float(out) if out.ndim == 0 else out


def force_closed(params: PhysicalParams, pulse: RadiationPulse, t: float, q: float, qdot: float) -> float:
    if abs(qdot) >= 1:
        raise LightSpeedError("force diverges at |qdot| = 1")
    _, _, Vs = eval_V(pulse, t, q)
    return params.a * Vs - 0.5 * params.a**2 * qdot / (1 - qdot * qdot)


@dataclass(frozen=True)
class JumpForce:
    """Jump-route force with the pieces it was assembled from."""

    force: float
    jump_pi: float
    jump_tau: float
    qdot: float
    V_t: float
    V_s: float
    sample: FieldSample


def force_jump_detail(params: PhysicalParams, traj: Trajectory, pulse: RadiationPulse, t: float) -> JumpForce:
    q = traj.q(t)
    qdot = traj.qdot(t)
    sample = eval_field(params.a, traj, pulse, t, q)
    left = stress(sample, "left")
    right = stress(sample, "right")
    jpi = right.pi - left.pi
    jtau = right.tau - left.tau
    _, Vt, Vs = eval_V(pulse, t, q)
    return JumpForce(-qdot * jpi - jtau, jpi, jtau, qdot, Vt, Vs, sample)


def force_jump(params: PhysicalParams, traj: Trajectory, pulse: RadiationPulse, t: float) -> float:
    return force_jump_detail(params, traj, pulse, t).force


def momentum_jump_decomposition(params: PhysicalParams, traj: Trajectory, pulse: RadiationPulse, t: float):
    """``([u_t u_s], V_t [w_s] + V_s [w_t] + [w_s w_t])`` at the path."""
    det = force_jump_detail(params, traj, pulse, t)
    J = jump_quantities(params.a, det.qdot)
    return det.jump_pi, det.V_t * J.ws + det.V_s * J.wt + J.ws_wt


def force_diagnostics(params: PhysicalParams, traj: Trajectory, pulse: RadiationPulse, times) -> list[tuple]:
    rows = []
    for t in np.asarray(times, dtype=float):
        fj = force_jump(params, traj, pulse, t)
        fc = force_closed(params, pulse, t, traj.q(t), traj.qdot(t))
        rows.append((float(t), fc, fj, abs(fc - fj)))
    return rows


def write_force_csv(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "f_closed", "f_jump", "residual"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    return path
