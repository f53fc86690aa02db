"""Scenario files, named presets, single runs and beta sweeps."""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .dynamics import (
    IntegratorOptions,
    SolveResult,
    exit_angle_slope,
    integrate,
    sensitivity_Z,
)
from .field import Trajectory, write_snapshot_csv
from .force import force_diagnostics, write_force_csv
from .model import (
    IntegrationError,
    LightSpeedError,
    OutOfDomainError,
    PhysicalParams,
    RadiationPulse,
    RootFindingError,
    ConsistencyError,
    bump_pulse,
    incoming_sine_pulse,
    make_profiles,
)

SCHEMA_VERSION = 1
OUTPUT_ENV = "SELFFORCE1D_OUTPUT_DIR"
PRESETS = ("static", "stability", "instability", "lemma1", "custom")
OUTPUTS = ("trajectory", "events", "diagnostics", "field_snapshot")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
NUMERICAL_ERRORS = (IntegrationError, RootFindingError, ConsistencyError, LightSpeedError, OutOfDomainError)

_FUNCTION_SCHEMA = {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "preset", "params"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "preset": {"enum": list(PRESETS)},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a", "m"],
            "properties": {"a": {"type": "number"}, "m": {"type": "number"}},
        },
        "beta": {"type": "number", "minimum": 0},
        "pulse": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _FUNCTION_SCHEMA for k in ("v0", "v1", "F", "G")},
        },
        "span": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["DOP853", "RK45", "Radau", "LSODA"]},
                "delta_theta": {"type": "number", "exclusiveMinimum": 0},
                "tol_rest": {"type": "number", "exclusiveMinimum": 0},
                "max_step": {"type": "number", "exclusiveMinimum": 0},
                "stop_at_rest": {"type": "boolean"},
            },
        },
        "outputs": {"type": "array", "items": {"enum": list(OUTPUTS)}, "uniqueItems": True},
        "snapshot": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t"],
            "properties": {
                "t": {"type": "number", "minimum": 0},
                "s_min": {"type": "number"},
                "s_max": {"type": "number"},
                "n": {"type": "integer", "minimum": 2},
            },
        },
        "diagnostic_samples": {"type": "integer", "minimum": 1},
    },
}


class ConfigError(ValueError):
    """Invalid scenario; ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SnapshotSpec:
    t: float
    s_min: float = -10.0
    s_max: float = 10.0
    n: int = 401

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n)


@dataclass(frozen=True)
class Scenario:
    preset: str
    params: PhysicalParams
    pulse: RadiationPulse
    span: tuple[float, float] = (0.0, 60.0)
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    outputs: tuple[str, ...] = OUTPUTS
    beta: float | None = None
    snapshot: SnapshotSpec | None = None
    diagnostic_samples: int = 200
    name: str = ""

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "preset": self.preset,
            "params": {"a": self.params.a, "m": self.params.m},
            "span": list(self.span),
            "integrator": {k: v for k, v in asdict(self.integrator).items() if not (k == "max_step" and math.isinf(v))},
            "outputs": list(self.outputs),
            "diagnostic_samples": self.diagnostic_samples,
        }
        if self.beta is not None:
            out["beta"] = self.beta
        else:
            out["pulse"] = self.pulse.to_dict()
        if self.snapshot is not None:
            out["snapshot"] = asdict(self.snapshot)
        return out


def _path(err: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def scenario_from_dict(raw: dict) -> Scenario:
    """Validate a decoded scenario and build it; raises :class:`ConfigError`."""
    try:
        jsonschema.validate(raw, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(err.message, _path(err)) from None

    preset = raw["preset"]
    try:
        params = PhysicalParams(**raw["params"])
    except ValueError as err:
        raise ConfigError(str(err), "$.params") from None

    beta = raw.get("beta")
    if preset == "instability":
        if "pulse" in raw:
            raise ConfigError("instability preset builds its own pulse from beta", "$.pulse")
        if beta is None:
            raise ConfigError("instability preset needs beta", "$.beta")
        if params.a <= 0:
            raise ConfigError("instability preset assumes a > 0", "$.params.a")
        if params.m >= 0:
            raise ConfigError("instability preset needs m < 0", "$.params.m")
        pulse = incoming_sine_pulse(beta)
    else:
        if beta is not None:
            raise ConfigError("beta only applies to the instability preset", "$.beta")
        try:
            if "pulse" in raw:
                pulse = RadiationPulse.from_dict(raw["pulse"])
            elif preset == "stability":
                pulse = bump_pulse()
            else:
                pulse = RadiationPulse()
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError(str(err), "$.pulse") from None
        if preset == "static" and not pulse.is_zero:
            raise ConfigError("static preset takes no pulse", "$.pulse")
        if preset == "stability" and params.m <= 0:
            raise ConfigError("stability preset needs m > 0", "$.params.m")
        if preset == "lemma1" and params.a <= 0:
            raise ConfigError("lemma1 preset assumes a > 0", "$.params.a")

    span = tuple(float(x) for x in raw.get("span", (0.0, 60.0)))
    if span[0] != 0.0 or span[1] <= 0:
        raise ConfigError("span must be [0, t_end] with t_end > 0", "$.span")
    snap = raw.get("snapshot")
    return Scenario(
        preset=preset,
        params=params,
        pulse=pulse,
        span=span,
        integrator=IntegratorOptions.from_dict(raw.get("integrator", {})),
        outputs=tuple(raw.get("outputs", OUTPUTS)),
        beta=beta,
        snapshot=SnapshotSpec(**snap) if snap else None,
        diagnostic_samples=raw.get("diagnostic_samples", 200),
        name=raw.get("name", ""),
    )


def load_scenario(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON ({err})") from None
    except OSError as err:
        raise ConfigError(f"cannot read scenario file ({err})") from None
    return scenario_from_dict(raw)


def preset_scenario(preset: str, a: float = 1.0, m: float | None = None, beta: float = 1e-3, **kw) -> Scenario:
    """Ready-made scenarios mirroring the regimes of the theory."""
    default_m = {"static": 1.0, "stability": 1.0, "instability": -1.0, "lemma1": -1.0, "custom": 1.0}
    raw = {"schema_version": SCHEMA_VERSION, "preset": preset, "params": {"a": a, "m": default_m[preset] if m is None else m}}
    if preset == "instability":
        raw["beta"] = beta
    raw.update(kw)
    return scenario_from_dict(raw)


def output_dir(default=None) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    base = Path(env) if env else Path(default or "runs")
    base.mkdir(parents=True, exist_ok=True)
    return base


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    scenario: Scenario
    verdict: str
    exit_code: int
    result: SolveResult | None = None
    files: dict[str, str] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    elapsed: float = 0.0


def solve_scenario(sc: Scenario) -> SolveResult:
    return integrate(sc.params, make_profiles(sc.pulse), span=sc.span, opts=sc.integrator)


def instability_summary(sc: Scenario, result: SolveResult) -> dict:
    out: dict = {"beta": sc.beta, "first_order_slope": exit_angle_slope(sc.params)}
    try:
        th = result.theta_at_b(-3.0)
    except ValueError:
        th = float("nan")
    out["theta_at_b_minus3"] = th
    out["theta_over_beta"] = th / sc.beta if sc.beta else float("nan")
    ls = result.events_of("lightspeed")
    out["t_lightspeed"] = ls[0].t if ls else float("nan")
    return out


def run(sc: Scenario, out_dir=None, stream=None) -> RunReport:
    """Run one scenario, write its artifacts and print the verdict line."""
    stream = stream or sys.stdout
    start = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else output_dir()
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(sc, verdict="", exit_code=EXIT_OK)
    try:
        if sc.preset == "lemma1":
            rep = sensitivity_Z(sc.params)
            report.verdict = f"SENSITIVITY({rep.value:.12g})"
            report.extras = {"Z_closed": rep.closed, "Z_quadrature": rep.quadrature, "Z_ode": rep.ode, "spread": rep.spread}
        else:
            result = solve_scenario(sc)
            report.result = result
            report.verdict = result.outcome.verdict()
            if sc.preset == "instability":
                report.extras = instability_summary(sc, result)
            _write_artifacts(sc, result, out, report)
    except NUMERICAL_ERRORS as err:
        report.exit_code = EXIT_NUMERIC
        report.verdict = "FAILED"
        report.extras = {"error": f"{type(err).__name__}: {err}"}
        t = getattr(err, "t", None)
        if t is not None:
            report.extras["last_t"] = t
            report.extras["last_state"] = np.asarray(err.state).tolist()
        print(f"numerical failure: {report.extras}", file=sys.stderr)
    report.elapsed = time.perf_counter() - start
    _write_manifest(sc, out, report)
    print(f"verdict: {report.verdict}", file=stream)
    return report


def _write_artifacts(sc: Scenario, result: SolveResult, out: Path, report: RunReport) -> None:
    if "trajectory" in sc.outputs:
        p = out / "trajectory.csv"
        write_trajectory_csv(p, result)
        report.files["trajectory"] = p.name
    if "events" in sc.outputs:
        p = out / "events.csv"
        write_events_csv(p, result)
        report.files["events"] = p.name
    need_field = "diagnostics" in sc.outputs or "field_snapshot" in sc.outputs
    if not need_field:
        return
    traj = Trajectory.from_solve(result)
    if "diagnostics" in sc.outputs:
        times = np.linspace(traj.t_start, traj.t_end, sc.diagnostic_samples + 1)[1:]
        p = out / "diagnostics.csv"
        write_force_csv(p, force_diagnostics(sc.params, traj, sc.pulse, times))
        report.files["diagnostics"] = p.name
    if "field_snapshot" in sc.outputs:
        snap = sc.snapshot or SnapshotSpec(t=min(traj.t_end, 5.0))
        t = min(snap.t, traj.t_end)
        p = out / "field_snapshot.csv"
        write_snapshot_csv(p, sc.params.a, traj, sc.pulse, t, snap.grid)
        report.files["field_snapshot"] = p.name


def write_trajectory_csv(path, result: SolveResult) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "d", "b", "theta", "q", "qdot"])
        for i, t in enumerate(result.t):
            d, b, th = result.y[:, i]
            w.writerow([repr(float(v)) for v in (t, d, b, th, 0.5 * (d + b), math.sin(th))])
    return path


def write_events_csv(path, result: SolveResult) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "t", "d", "b", "theta"])
        for e in result.events:
            w.writerow([e.kind, repr(e.t), repr(e.state.d), repr(e.state.b), repr(e.state.theta)])
    return path


def _write_manifest(sc: Scenario, out: Path, report: RunReport) -> None:
    manifest = {
        "package_version": __version__,
        "scenario": sc.to_dict(),
        "verdict": report.verdict,
        "exit_code": report.exit_code,
        "files": report.files,
        "extras": report.extras,
        "elapsed_s": report.elapsed,
    }
    if report.result is not None:
        manifest["events"] = [{"kind": e.kind, "t": e.t} for e in report.result.events]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
    report.files["manifest"] = "manifest.json"


# ---------------------------------------------------------------------------
# Beta sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    beta: float
    theta_at_b_minus3: float
    t_lightspeed: float
    theta_over_beta: float
    first_order_slope: float
    rel_error: float
    status: str


def _sweep_point(sc: Scenario) -> SweepRow:
    slope = exit_angle_slope(sc.params)
    try:
        result = solve_scenario(sc)
    except NUMERICAL_ERRORS as err:
        nan = float("nan")
        return SweepRow(sc.beta, nan, nan, nan, slope, nan, f"error: {type(err).__name__}")
    info = instability_summary(sc, result)
    ratio = info["theta_over_beta"]
    rel = abs(ratio / slope - 1) if sc.beta else float("nan")
    return SweepRow(
        beta=sc.beta,
        theta_at_b_minus3=info["theta_at_b_minus3"],
        t_lightspeed=info["t_lightspeed"],
        theta_over_beta=ratio,
        first_order_slope=slope,
        rel_error=rel,
        status=result.outcome.verdict(),
    )


def sweep_beta(base: Scenario, betas, workers: int = 1) -> list[SweepRow]:
    """Rerun the instability scenario once per ``beta``."""
    if base.preset != "instability":
        raise ConfigError("sweeps need the instability preset", "$.preset")
    runs = []
    for b in betas:
        b = float(b)
        if b < 0:
            raise ConfigError(f"beta must be nonnegative, got {b}", "$.beta")
        runs.append(replace(base, beta=b, pulse=incoming_sine_pulse(b)))
    if workers > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, runs))
    return [_sweep_point(r) for r in runs]


def write_sweep_csv(path, rows: list[SweepRow]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "theta_at_b=-3", "t_lightspeed", "theta_over_beta", "first_order_slope", "rel_error", "status"])
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return path
