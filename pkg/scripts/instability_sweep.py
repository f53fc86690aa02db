"""Negative-mass sweep over the incoming pulse amplitude beta.

Writes sweep.csv with theta at b = -3, the light-speed time and the relative
error of theta/beta against the first-order slope.

Usage: python3 scripts/instability_sweep.py [--out DIR] [--workers N]
"""

import argparse
from pathlib import Path

from selfforce1d.scenario import preset_scenario, sweep_beta, write_sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--betas", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 0.0])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rows = sweep_beta(preset_scenario("instability", span=[0.0, 60.0]), args.betas, workers=args.workers)
    for r in rows:
        print(f"beta={r.beta:8.1e}  theta/beta={r.theta_over_beta:+.6f}  rel={r.rel_error:.2e}  t*={r.t_lightspeed:.4f}  {r.status}")
    print(f"wrote {write_sweep_csv(args.out / 'sweep.csv', rows)}")


if __name__ == "__main__":
    main()
