"""Grid refinement of the finite-difference wave oracle against the analytic field.

Runs the smooth (C^4) pulse and the sine-window pulse so the effect of data
smoothness on the observed order is visible.

Usage: python3 scripts/convergence_study.py [--out DIR]
"""

import argparse
from pathlib import Path

from selfforce1d.dynamics import integrate
from selfforce1d.field import Trajectory
from selfforce1d.model import PhysicalParams, incoming_sine_pulse, make_profiles, smooth_pulse
from selfforce1d.oracle import convergence_study, write_convergence_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--hs", type=float, nargs="+", default=[0.02, 0.01, 0.005, 0.0025])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    params = PhysicalParams(1.0, -1.0)
    for name, pulse in (("smooth", smooth_pulse()), ("sine", incoming_sine_pulse(0.5))):
        traj = Trajectory.from_solve(integrate(params, make_profiles(pulse), span=(0.0, 8.0)))
        rows = convergence_study(params.a, traj, pulse, args.hs, t_end=4.0, window=5.0)
        for r in rows:
            order = "" if r.order_estimate is None else f"{r.order_estimate:.2f}"
            print(f"{name:6s} h={r.h:.4f} eps={r.eps:.3f} Linf={r.linf_error:.3e} order={order}")
        print(f"wrote {write_convergence_csv(args.out / f'convergence_{name}.csv', rows)}")


if __name__ == "__main__":
    main()
