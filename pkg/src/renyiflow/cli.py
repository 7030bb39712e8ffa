"""Experiment driver: parse JSON configs, run flows, write reports.

Config document (single JSON object):

    {
      "d": 3,
      "p": "2/3",
      "initial_datum": {"kind": "gaussian", "width": 1.0},
      "grid": {"r_max": 40.0, "n": 800, "stretch": 1.0},
      "solver": {"cfl": 0.85},
      "t_end": 5.0,
      "record_every": 0.05,
      "checks": "all",
      "seed": 20260814,
      "output_dir": "out/example"
    }

p (and any other number) may be an exact fraction string "a/b"; this keeps
pairs like 2/3 at the same float the closed-form references use. Datum
kinds: barenblatt(t0) starts from the source-type solution at time t0, so
the tau column should sit at t0 throughout; gaussian(width) is
exp(-(r/width)^2); indicator(radius, smoothing) is a mollified step;
table(r, u) interpolates samples linearly. Every datum is renormalized to
unit mass. "record_times" (strictly increasing offsets) may replace
"record_every" when a transient needs a nonuniform cadence. "checks" is
"all" (every check the regime admits) or a list drawn from CHECK_NAMES;
a listed check whose hypothesis fails at (d, p) is rejected at parse time.

Outputs per run, in the output directory: trajectory.csv with columns
t, dt, mass, theta, E, I, F, G, H, J, q, s, tau, rel_entropy, R (one row
per record, 17 significant digits, so identical configs give byte-identical
files); report.json with every check clause's measured value, tolerance,
and margin; summary.txt with one verdict line per check.

The gn check's perturbations come from the linear congruential generator
x -> (1664525 x + 1013904223) mod 2**32 (seeded from "seed", default
20260814), documented so other implementations can reproduce the exact
perturbation set from the config alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .barenblatt import BarenblattReference, build_reference, self_similar_density
from .checks import CHECK_NAMES, CheckResult, compatible_checks, incompatibility, run_checks
from .grid import DensityState, build_grid, project_initial
from .params import ModelParams, ParameterDomainError, RegimeError
from .solver import InstabilityError, SolverConfig, StiffnessError, evolve

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "run_experiment",
    "write_trajectory_csv",
    "main",
]

CSV_COLUMNS = ("t", "dt", "mass", "theta", "E", "I", "F", "G", "H", "J",
               "q", "s", "tau", "rel_entropy", "R")

_CSV_FIELDS = ("t", "dt", "mass", "theta", "entropy", "fisher", "f_power",
               "g_power", "h_renyi", "j_scale", "q_ratio", "s_match", "tau",
               "rel_entropy", "remainder")

_DATUM_ARGS = {
    "barenblatt": ("t0",),
    "gaussian": ("width",),
    "indicator": ("radius", "smoothing"),
    "table": ("r", "u"),
}

_SOLVER_KEYS = ("cfl", "dt_max", "dt_min", "u_floor")

_TOP_KEYS = ("d", "p", "initial_datum", "grid", "solver", "t_end",
             "record_every", "record_times", "checks", "seed", "output_dir")

DEFAULT_SEED = 20260814


class ConfigError(ValueError):
    """Config rejected at parse time; the message names the field at fault."""


def _json_default(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _fail(field: str, message: str) -> ConfigError:
    return ConfigError(f"config field {field!r}: {message}")


def _as_number(value, field: str) -> float:
    """Accept JSON numbers and exact fraction strings like '2/3'."""
    if isinstance(value, bool):
        raise _fail(field, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.split("/")
        try:
            terms = [float(x) for x in parts] if len(parts) in (1, 2) else None
        except ValueError:
            terms = None
        if terms is not None:
            if len(terms) == 2:
                if terms[1] == 0.0:
                    raise _fail(field, "fraction has zero denominator")
                return terms[0] / terms[1]
            return terms[0]
    raise _fail(field, f"expected a number or 'a/b' fraction string, got {value!r}")


def _as_int(value, field: str) -> int:
    x = _as_number(value, field)
    if x != int(x):
        raise _fail(field, f"expected an integer, got {value!r}")
    return int(x)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    label: str
    params: ModelParams
    datum: dict
    r_max: float
    n: int
    stretch: float
    solver: SolverConfig
    t_end: float
    checks: tuple[str, ...]
    seed: int
    output_dir: str | None
    # barenblatt data pin the expected delay at t0; other data leave it free
    expected_tau: float | None


def _parse_datum(raw, p: float) -> dict:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise _fail("initial_datum", "expected an object with a 'kind' key")
    kind = raw["kind"]
    if kind not in _DATUM_ARGS:
        raise _fail("initial_datum.kind",
                    f"unknown kind {kind!r}; one of {', '.join(sorted(_DATUM_ARGS))}")
    extra = set(raw) - {"kind", *_DATUM_ARGS[kind]}
    if extra:
        raise _fail("initial_datum", f"unexpected keys for {kind}: {', '.join(sorted(extra))}")
    out: dict = {"kind": kind}
    if kind == "table":
        r = raw.get("r")
        u = raw.get("u")
        if not isinstance(r, list) or not isinstance(u, list) or len(r) != len(u) or len(r) < 2:
            raise _fail("initial_datum", "table needs equal-length lists r, u with >= 2 samples")
        rv = np.array([_as_number(x, "initial_datum.r") for x in r])
        uv = np.array([_as_number(x, "initial_datum.u") for x in u])
        if rv[0] < 0.0 or np.any(np.diff(rv) <= 0.0):
            raise _fail("initial_datum.r", "radii must be nonnegative and strictly increasing")
        if np.any(uv < 0.0) or not np.any(uv > 0.0):
            raise _fail("initial_datum.u", "values must be nonnegative with positive mass")
        out["r"], out["u"] = rv.tolist(), uv.tolist()
        return out
    for name in _DATUM_ARGS[kind]:
        if name not in raw:
            raise _fail(f"initial_datum.{name}", f"required for kind {kind!r}")
        val = _as_number(raw[name], f"initial_datum.{name}")
        if val <= 0.0:
            raise _fail(f"initial_datum.{name}", f"must be positive, got {val}")
        out[name] = val
    return out


def parse_config(document: dict | str, label: str = "config") -> ExperimentConfig:
    """Validate a config document (dict or JSON text) into an ExperimentConfig.

    Rejection happens here, not at run time: malformed JSON reports line and
    column, bad fields are named, and any requested check whose hypothesis
    the (d, p) regime violates is refused with that hypothesis spelled out.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(document) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("d", "p", "initial_datum", "grid", "t_end"):
        if key not in document:
            raise ConfigError(f"missing required config key {key!r}")

    d = _as_int(document["d"], "d")
    p = _as_number(document["p"], "p")
    try:
        params = ModelParams(d, p)
    except (ParameterDomainError, RegimeError, ValueError) as e:
        raise ConfigError(f"config field 'd'/'p': {e}") from e

    datum = _parse_datum(document["initial_datum"], p)

    raw_grid = document["grid"]
    if isinstance(raw_grid, dict):
        extra = set(raw_grid) - {"r_max", "n", "stretch"}
        if extra:
            raise _fail("grid", f"unexpected keys: {', '.join(sorted(extra))}")
        if "r_max" not in raw_grid or "n" not in raw_grid:
            raise _fail("grid", "needs r_max and n")
        r_max = _as_number(raw_grid["r_max"], "grid.r_max")
        n = _as_int(raw_grid["n"], "grid.n")
        stretch = _as_number(raw_grid.get("stretch", 1.0), "grid.stretch")
    elif isinstance(raw_grid, list) and len(raw_grid) in (2, 3):
        r_max = _as_number(raw_grid[0], "grid[0]")
        n = _as_int(raw_grid[1], "grid[1]")
        stretch = _as_number(raw_grid[2], "grid[2]") if len(raw_grid) == 3 else 1.0
    else:
        raise _fail("grid", "expected {r_max, n, stretch} or [r_max, n, stretch]")
    if r_max <= 0.0:
        raise _fail("grid.r_max", f"must be positive, got {r_max}")
    if n < 8:
        raise _fail("grid.n", f"needs at least 8 cells, got {n}")
    if stretch < 1.0:
        raise _fail("grid.stretch", f"must be >= 1, got {stretch}")

    t_end = _as_number(document["t_end"], "t_end")
    if t_end <= 0.0:
        raise _fail("t_end", f"must be positive, got {t_end}")

    solver_raw = document.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise _fail("solver", "expected an object of solver settings")
    extra = set(solver_raw) - set(_SOLVER_KEYS)
    if extra:
        raise _fail("solver", f"unknown solver keys: {', '.join(sorted(extra))}")
    solver_kwargs = {k: _as_number(v, f"solver.{k}") for k, v in solver_raw.items()}
    if "record_times" in document:
        rt = document["record_times"]
        if not isinstance(rt, list) or not rt:
            raise _fail("record_times", "expected a nonempty list of offsets")
        solver_kwargs["record_times"] = tuple(
            _as_number(x, "record_times") for x in rt)
    if "record_every" in document:
        solver_kwargs["record_every"] = _as_number(document["record_every"], "record_every")
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as e:
        raise ConfigError(f"config field 'solver': {e}") from e

    raw_checks = document.get("checks", "all")
    if raw_checks == "all":
        checks = compatible_checks(params)
    else:
        if not isinstance(raw_checks, list):
            raise _fail("checks", "expected 'all' or a list of check names")
        seen: list[str] = []
        for name in raw_checks:
            if name not in CHECK_NAMES:
                raise _fail("checks",
                            f"unknown check {name!r}; valid: {', '.join(CHECK_NAMES)}")
            reason = incompatibility(name, params)
            if reason is not None:
                raise _fail("checks", f"incompatible with d={d}, p={p:g}: {reason}")
            if name not in seen:
                seen.append(name)
        checks = tuple(seen)

    seed = _as_int(document.get("seed", DEFAULT_SEED), "seed")
    output_dir = document.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise _fail("output_dir", "expected a string path")

    expected_tau = datum["t0"] if datum["kind"] == "barenblatt" else None
    return ExperimentConfig(
        label=label, params=params, datum=datum, r_max=r_max, n=n,
        stretch=stretch, solver=solver, t_end=t_end, checks=checks,
        seed=seed, output_dir=output_dir, expected_tau=expected_tau,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text, label=path.stem)


def build_initial_state(config: ExperimentConfig) -> DensityState:
    grid = build_grid(config.params.d, config.r_max, config.n, stretch=config.stretch)
    datum = config.datum
    kind = datum["kind"]
    if kind == "barenblatt":
        params = config.params
        f = lambda r: self_similar_density(r, datum["t0"], params)
    elif kind == "gaussian":
        w = datum["width"]
        f = lambda r: np.exp(-((r / w) ** 2))
    elif kind == "indicator":
        rad, sm = datum["radius"], datum["smoothing"]
        f = lambda r: 0.5 * erfc((r - rad) / sm)
    else:  # table
        rv = np.asarray(datum["r"])
        uv = np.asarray(datum["u"])
        f = lambda r: np.interp(r, rv, uv, left=uv[0], right=0.0)
    return project_initial(f, grid)


def write_trajectory_csv(path: Path, trajectory) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for rec in trajectory.records:
        lines.append(",".join("%.17g" % getattr(rec, f) for f in _CSV_FIELDS))
    path.write_text("\n".join(lines) + "\n")


def _check_payload(result: CheckResult) -> dict:
    body = {
        "name": result.name,
        "applicable": result.applicable,
        "passed": result.passed,
        "slack": result.slack,
        "tolerance": result.tolerance,
    }
    body.update(result.details)
    return body


def _reference_payload(reference: BarenblattReference) -> dict:
    ex = reference.exponents
    return {
        "d": reference.params.d,
        "p": reference.params.p,
        "regime": reference.params.regime,
        "c_star": reference.c_star,
        "theta": reference.theta,
        "entropy": reference.entropy,
        "fisher": reference.fisher,
        "h_star": reference.h_star,
        "j_star": reference.j_star,
        "theta_star": reference.theta_star,
        "c_gn": reference.c_gn,
        "exponents": {
            "mu": ex.mu, "eta": ex.eta, "sigma": ex.sigma, "kappa": ex.kappa,
            "gn_q": ex.gn_q, "theorem1_valid": ex.theorem1_valid,
            "theorem2_valid": ex.theorem2_valid, "moments_finite": ex.moments_finite,
        },
    }


def _summary_lines(label: str, trajectory, results: list[CheckResult]) -> list[str]:
    rec0, rec1 = trajectory.records[0], trajectory.records[-1]
    lines = [
        f"run {label}: {len(trajectory.records)} records, {trajectory.n_steps} steps, "
        f"t in [{rec0.t:g}, {rec1.t:g}], wall {trajectory.wall_time:.2f}s",
    ]
    for r in results:
        if not r.applicable:
            lines.append(f"  {r.name:12s} SKIP  {r.details['reason']}")
            continue
        binding = min(r.details["clauses"].items(), key=lambda kv: kv[1]["margin"])
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(
            f"  {r.name:12s} {verdict}  slack {r.slack:+.4f}  "
            f"binding {binding[0]}: measured {binding[1]['measured']:.6g} "
            f"vs tolerance {binding[1]['tolerance']:.6g}")
    failed = [r.name for r in results if r.applicable and not r.passed]
    lines.append("all requested checks passed" if not failed
                 else f"FAILED: {', '.join(failed)}")
    return lines


def run_experiment(config: ExperimentConfig, out_dir: str | Path,
                   tol_scale: float = 1.0, echo=print) -> dict:
    """Run one config end to end; returns the report dict (also written
    to report.json, next to trajectory.csv and summary.txt)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state = build_initial_state(config)
    reference = build_reference(config.params)
    trajectory = evolve(state, config.t_end, config.params, config.solver)
    results = run_checks(
        config.checks, trajectory, config.params, reference,
        tol_scale=tol_scale, expected_tau=config.expected_tau,
        gn_seed=config.seed)

    write_trajectory_csv(out / "trajectory.csv", trajectory)
    all_passed = all(r.passed for r in results if r.applicable)
    report = {
        "label": config.label,
        "d": config.params.d,
        "p": config.params.p,
        "tol_scale": tol_scale,
        "reference": _reference_payload(reference),
        "run": {
            "n_steps": trajectory.n_steps,
            "n_records": len(trajectory.records),
            "t_end": config.t_end,
            "clipped_mass": trajectory.clipped_mass,
            "limited_steps": trajectory.limited_steps,
            "wall_time": trajectory.wall_time,
        },
        "checks": [_check_payload(r) for r in results],
        "all_passed": all_passed,
    }
    (out / "report.json").write_text(_dump_json(report))
    lines = _summary_lines(config.label, trajectory, results)
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if echo is not None:
        echo("\n".join(lines))
    return report


def _run_path(path: str, out_root: str | None, tol_scale: float,
              echo=print) -> tuple[str, dict | None, str | None]:
    """Isolated single-config execution used by run and sweep."""
    try:
        config = load_config(path)
        out = Path(out_root) if out_root else (
            Path(config.output_dir) if config.output_dir else Path("out") / config.label)
        report = run_experiment(config, out, tol_scale=tol_scale, echo=echo)
        return config.label, report, None
    except ConfigError as e:
        return Path(path).stem, None, f"config error: {e}"
    except (StiffnessError, InstabilityError) as e:
        return Path(path).stem, None, f"solver abort: {e}"


def _sweep_worker(args: tuple[str, str | None, float]) -> tuple[str, dict | None, str | None]:
    path, out_root, tol_scale = args
    sub = str(Path(out_root) / Path(path).stem) if out_root else None
    return _run_path(path, sub, tol_scale, echo=None)


def _collect_configs(spec: str) -> list[str]:
    path = Path(spec)
    if path.is_dir():
        found = sorted(str(p) for p in path.glob("*.json"))
        return found
    if path.suffix == ".json":
        return [str(path)]
    if path.is_file():
        # plain text list, one config path per line
        return [line.strip() for line in path.read_text().splitlines()
                if line.strip() and not line.strip().startswith("#")]
    raise ConfigError(f"sweep target {spec!r} is neither a directory, .json, nor a list file")


def _matrix_table(rows: list[tuple[str, dict | None, str | None]]) -> str:
    width = max([len(r[0]) for r in rows], default=5)
    header = f"{'run':<{width}}  {'d':>2} {'p':>8}  " + " ".join(
        f"{n:>11}" for n in CHECK_NAMES)
    out = [header, "-" * len(header)]
    for label, report, error in rows:
        if report is None:
            out.append(f"{label:<{width}}  ERROR: {error}")
            continue
        by_name = {c["name"]: c for c in report["checks"]}
        cells = []
        for name in CHECK_NAMES:
            c = by_name.get(name)
            if c is None:
                cells.append(f"{'-':>11}")
            elif not c["applicable"]:
                cells.append(f"{'skip':>11}")
            else:
                cells.append(f"{'PASS' if c['passed'] else 'FAIL':>11}")
        out.append(f"{label:<{width}}  {report['d']:>2} {report['p']:>8.4g}  " + " ".join(cells))
    return "\n".join(out)


def cmd_run(args) -> int:
    label, report, error = _run_path(args.config, args.out, args.tol_scale)
    if error is not None:
        print(f"{label}: {error}", file=sys.stderr)
        return 2 if error.startswith("config error") else 3
    return 0 if report["all_passed"] else 1


def cmd_verify(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.check not in CHECK_NAMES:
        print(f"unknown check {args.check!r}; valid: {', '.join(CHECK_NAMES)}", file=sys.stderr)
        return 2
    reason = incompatibility(args.check, config.params)
    if reason is not None:
        print(f"check incompatible with this config: {reason}", file=sys.stderr)
        return 2
    config = dataclasses.replace(config, checks=(args.check,))
    out = Path(args.out) if args.out else (
        Path(config.output_dir) if config.output_dir else Path("out") / config.label)
    try:
        report = run_experiment(config, out, tol_scale=args.tol_scale)
    except (StiffnessError, InstabilityError) as e:
        print(f"solver abort: {e}", file=sys.stderr)
        return 3
    return 0 if report["all_passed"] else 1


def cmd_reference(args) -> int:
    try:
        params = ModelParams(args.d, _as_number(args.p, "--p"))
    except (ParameterDomainError, RegimeError, ConfigError, ValueError) as e:
        print(f"invalid parameters: {e}", file=sys.stderr)
        return 2
    reference = build_reference(params)
    print(_dump_json(_reference_payload(reference)), end="")
    return 0


def cmd_sweep(args) -> int:
    try:
        paths = _collect_configs(args.configs)
    except ConfigError as e:
        print(f"sweep error: {e}", file=sys.stderr)
        return 2
    out_root = Path(args.out) if args.out else Path("out")
    rows: list[tuple[str, dict | None, str | None]] = []
    if args.parallel > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(
                _sweep_worker,
                [(p, str(out_root), args.tol_scale) for p in paths]))
    else:
        for p in paths:
            rows.append(_run_path(p, str(out_root / Path(p).stem), args.tol_scale, echo=None))

    merged = {
        "runs": [r[1] if r[1] is not None else {"label": r[0], "error": r[2]}
                 for r in rows],
        "all_passed": all(r[1] is not None and r[1]["all_passed"] for r in rows),
    }
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "sweep_report.json").write_text(_dump_json(merged))
    if rows:
        print(_matrix_table(rows))
    else:
        print("no configs found; nothing to run")
    return 0 if merged["all_passed"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="renyiflow",
        description="Run radial nonlinear-diffusion experiments and verification checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tol-scale", type=float, default=1.0, dest="tol_scale",
                        help="multiplies every default tolerance")

    p_run = sub.add_parser("run", parents=[common], help="run one config")
    p_run.add_argument("config")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="run a directory (or list file) of configs")
    p_sweep.add_argument("configs")
    p_sweep.add_argument("--parallel", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_ref = sub.add_parser("reference", help="print closed-form reference values as JSON")
    p_ref.add_argument("--d", type=int, required=True)
    p_ref.add_argument("--p", required=True)
    p_ref.set_defaults(fn=cmd_reference)

    p_verify = sub.add_parser("verify", parents=[common], help="run a single named check")
    p_verify.add_argument("config")
    p_verify.add_argument("--check", required=True)
    p_verify.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
