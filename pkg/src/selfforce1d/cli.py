"""Command line entry point: ``python -m selfforce1d {run,sweep,verify,field-snapshot}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .field import Trajectory, write_snapshot_csv
from .scenario import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    NUMERICAL_ERRORS,
    ConfigError,
    load_scenario,
    output_dir,
    preset_scenario,
    run,
    solve_scenario,
    sweep_beta,
    write_sweep_csv,
)


class _Parser(argparse.ArgumentParser):
    """Usage errors count as configuration errors (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="selfforce1d", description=__doc__)
    p.add_argument("--out", type=Path, default=None, help="output directory (overridden by $SELFFORCE1D_OUTPUT_DIR)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("scenario", type=Path)

    s = sub.add_parser("sweep", help="instability sweep over beta")
    s.add_argument("--preset", choices=["instability"], default="instability")
    s.add_argument("--betas", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--m", type=float, default=-1.0)
    s.add_argument("--t-end", type=float, default=60.0)
    s.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--only", type=int, nargs="+", default=None, help="criterion numbers to run")

    f = sub.add_parser("field-snapshot", help="write (t, s, u, u_t, u_s) on a grid")
    f.add_argument("--t", type=float, required=True)
    f.add_argument("--grid", type=float, nargs=3, metavar=("S_MIN", "S_MAX", "N"), default=[-10.0, 10.0, 401])
    src = f.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path)
    src.add_argument("--preset", choices=["static", "stability", "instability"], default="stability")
    f.add_argument("--beta", type=float, default=1e-3)
    return p


def _out(args) -> Path:
    return output_dir(args.out)


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    return run(sc, _out(args)).exit_code


def cmd_sweep(args) -> int:
    base = preset_scenario(args.preset, a=args.a, m=args.m, beta=args.betas[0], span=[0.0, args.t_end])
    rows = sweep_beta(base, args.betas, workers=args.workers)
    path = write_sweep_csv(_out(args) / "sweep.csv", rows)
    print(f"{'beta':>10} {'theta(b=-3)':>14} {'t_lightspeed':>13} {'theta/beta':>12} {'rel_err':>10}  status")
    for r in rows:
        print(
            f"{r.beta:10.3g} {r.theta_at_b_minus3:14.6e} {r.t_lightspeed:13.6f} "
            f"{r.theta_over_beta:12.6f} {r.rel_error:10.2e}  {r.status}"
        )
    print(f"wrote {path}")
    return EXIT_NUMERIC if any(r.status.startswith("error") for r in rows) else EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(only=args.only)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_field_snapshot(args) -> int:
    if args.scenario is not None:
        sc = load_scenario(args.scenario)
    else:
        sc = preset_scenario(args.preset, beta=args.beta)
    s_min, s_max, n = args.grid
    if n < 2 or not float(n).is_integer() or s_max <= s_min:
        raise ConfigError("grid needs S_MIN < S_MAX and an integer N >= 2", "--grid")
    if args.t < 0:
        raise ConfigError("snapshot time must be nonnegative", "--t")
    result = solve_scenario(sc)
    traj = Trajectory.from_solve(result)
    if args.t > traj.t_end:
        raise ConfigError(f"t = {args.t} is past the end of the trajectory ({traj.t_end:.6g})", "--t")
    path = write_snapshot_csv(_out(args) / "field_snapshot.csv", sc.params.a, traj, sc.pulse, args.t, np.linspace(s_min, s_max, int(n)))
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "field-snapshot": cmd_field_snapshot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as err:
        print(f"numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
