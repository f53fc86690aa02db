"""Positive-mass runs over a grid of (a, m): measured decay rate of theta vs a^2/(2m).

Usage: python3 scripts/stability_experiment.py [--out DIR]
"""

import argparse
import csv
from pathlib import Path

from selfforce1d.dynamics import fit_decay_rate, integrate
from selfforce1d.model import PhysicalParams, bump_pulse, make_profiles


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--t-end", type=float, default=60.0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    profiles = make_profiles(bump_pulse())
    path = args.out / "stability.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "m", "outcome", "theta_final", "fitted_rate", "predicted_rate", "rel_error"])
        for a in (0.5, 1.0, 2.0):
            for m in (0.5, 1.0, 4.0):
                res = integrate(PhysicalParams(a, m), profiles, span=(0.0, args.t_end))
                rate = fit_decay_rate(res)
                pred = a * a / (2 * m)
                rel = abs(rate - pred) / pred
                w.writerow([a, m, res.outcome.kind, res.y[2, -1], rate, pred, rel])
                print(f"a={a:4.1f} m={m:4.1f}  {res.outcome.kind:10s} rate {rate:.5f} vs {pred:.5f} (rel {rel:.1e})")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
