"""Batch front-end: run configured experiments, emit CSV/JSON telemetry.

Config files are flat ``key = value`` text; ``#`` starts a comment. Records
are written as CSV with a fixed column set, a JSON summary captures the
termination, and the final iterate can be dumped as plain-text node values.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .driver import (AdaptiveSolveError, IterationRecord, RunConfig,
                     Termination, adaptive_solve)
from .errors import ConfigError
from .fespace import FeFunction
from .newton import IMPROVED, SIMPLE, StepSizeStrategy
from .problems import BUILTIN_PROBLEMS, initial_guess

EXIT_TOLERANCE = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_SOLVER_FAILURE = 3

CSV_COLUMNS = ("iter", "action", "dofs", "k_n", "delta_omega", "eta_total",
               "estimate_total", "true_error", "efficiency")

_DEFAULTS = {
    "strategy": "simple",
    "tau": "0.1",
    "gamma": "0.5",
    "theta": "0.5",
    "theta_mark": "0.5",
    "initial_n": "8",
    "initial_guess": "const(0)",
    "spike_bumps": "3",
    "stop_tolerance": "1e-3",
    "max_dof": "10000",
    "max_iterations": "200",
    "records_csv": "records.csv",
    "summary_json": "summary.json",
    "solution_dump": "",
}

_KNOWN_KEYS = {"problem", "epsilon", "alpha", "beta"} | set(_DEFAULTS)


@dataclass
class CliConfig:
    problem: str
    epsilon: float
    alpha: Optional[float]
    beta: Optional[float]
    strategy: str
    tau: float
    gamma: float
    theta: float
    theta_mark: float
    initial_n: int
    initial_guess: str
    spike_bumps: int
    stop_tolerance: float
    max_dof: int
    max_iterations: int
    records_csv: str
    summary_json: str
    solution_dump: str


def parse_config(path) -> CliConfig:
    """Parse a flat key = value config file; raise ConfigError on defects."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    for required in ("problem", "epsilon"):
        if required not in raw:
            raise ConfigError(f"missing required key {required!r}")
    if raw["problem"] not in BUILTIN_PROBLEMS:
        raise ConfigError(
            f"key 'problem': unknown problem {raw['problem']!r}; available: "
            + ", ".join(sorted(BUILTIN_PROBLEMS)))
    if raw["problem"] == "fisher":
        for required in ("alpha", "beta"):
            if required not in raw:
                raise ConfigError(
                    f"missing required key {required!r} (fisher boundary value)")

    merged = dict(_DEFAULTS)
    merged.update(raw)

    def as_float(key):
        try:
            return float(merged[key])
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not a number: "
                              f"{merged[key]!r}") from exc

    def as_int(key):
        try:
            return int(merged[key])
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not an integer: "
                              f"{merged[key]!r}") from exc

    cfg = CliConfig(
        problem=merged["problem"],
        epsilon=as_float("epsilon"),
        alpha=as_float("alpha") if "alpha" in raw else None,
        beta=as_float("beta") if "beta" in raw else None,
        strategy=merged["strategy"],
        tau=as_float("tau"),
        gamma=as_float("gamma"),
        theta=as_float("theta"),
        theta_mark=as_float("theta_mark"),
        initial_n=as_int("initial_n"),
        initial_guess=merged["initial_guess"],
        spike_bumps=as_int("spike_bumps"),
        stop_tolerance=as_float("stop_tolerance"),
        max_dof=as_int("max_dof"),
        max_iterations=as_int("max_iterations"),
        records_csv=merged["records_csv"],
        summary_json=merged["summary_json"],
        solution_dump=merged["solution_dump"],
    )
    if cfg.strategy not in (SIMPLE, IMPROVED):
        raise ConfigError(f"key 'strategy': expected 'simple' or 'improved', "
                          f"got {cfg.strategy!r}")
    for key, value in (("epsilon", cfg.epsilon), ("tau", cfg.tau),
                       ("gamma", cfg.gamma), ("theta", cfg.theta)):
        if value <= 0:
            raise ConfigError(f"key {key!r}: must be positive, got {value}")
    if not 0.0 < cfg.theta_mark < 1.0:
        raise ConfigError(f"key 'theta_mark': must lie in (0, 1), "
                          f"got {cfg.theta_mark}")
    if cfg.initial_n < 1:
        raise ConfigError(f"key 'initial_n': must be >= 1, got {cfg.initial_n}")
    if cfg.max_dof < 1 or cfg.max_iterations < 1:
        raise ConfigError("keys 'max_dof' and 'max_iterations' must be >= 1")
    return cfg


_GUESS_RE = re.compile(r"^(const|spike)\s*\(\s*([-+0-9.eE]+)\s*\)$")


def _parse_guess(text: str, bumps: int):
    text = text.strip()
    if text == "sign_x2":
        return "sign_x2", bumps
    if text == "spike":
        return "spike", bumps
    match = _GUESS_RE.match(text)
    if match:
        name, arg = match.groups()
        if name == "const":
            return ("const", float(arg)), bumps
        return "spike", int(float(arg))
    raise ConfigError(f"key 'initial_guess': cannot parse {text!r}; expected "
                      "const(c), spike, spike(n) or sign_x2")


def build_run(cfg: CliConfig):
    """Instantiate problem, initial mesh, initial guess and run config."""
    factory = BUILTIN_PROBLEMS[cfg.problem]
    if cfg.problem == "fisher":
        problem = factory(cfg.epsilon, cfg.alpha, cfg.beta)
    else:
        problem = factory(cfg.epsilon)
    mesh = problem.domain.initial_mesh(cfg.initial_n)
    guess_kind, bumps = _parse_guess(cfg.initial_guess, cfg.spike_bumps)
    try:
        guess = initial_guess(guess_kind, mesh, problem, bumps=bumps)
    except Exception as exc:
        raise ConfigError(f"key 'initial_guess': {exc}") from exc
    strategy = StepSizeStrategy(kind=cfg.strategy, tau=cfg.tau,
                                gamma=cfg.gamma)
    run_config = RunConfig(theta=cfg.theta, theta_mark=cfg.theta_mark,
                           strategy=strategy,
                           stop_tolerance=cfg.stop_tolerance,
                           max_dof=cfg.max_dof,
                           max_iterations=cfg.max_iterations)
    return problem, mesh, guess, run_config


# ---------------------------------------------------------------------------
# telemetry output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return "" if value is None else f"{value:.16e}"


def records_to_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join([
            str(r.n), r.action, str(r.dofs), _fmt(r.k), _fmt(r.delta_omega),
            _fmt(r.eta_total), _fmt(r.estimate_total), _fmt(r.true_error),
            _fmt(r.efficiency)]))
    return "\n".join(lines) + "\n"


def write_records_csv(path, records) -> None:
    Path(path).write_text(records_to_csv(records))


def read_records_csv(path) -> list[IterationRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path} is not a records CSV")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        opt = [float(p) if p else None for p in parts[3:]]
        records.append(IterationRecord(
            n=int(parts[0]), action=parts[1], dofs=int(parts[2]),
            k=opt[0], delta_omega=opt[1], eta_total=opt[2],
            estimate_total=opt[3], true_error=opt[4], efficiency=opt[5]))
    return records


def write_solution_dump(path, u: FeFunction) -> None:
    """Header, one `x [y] value` line per node, then element connectivity.

    The header carries the node and element counts as well, since a 2d node
    line at integer coordinates is not distinguishable from a connectivity
    line by content alone.
    """
    mesh = u.mesh
    lines = [f"# generation={mesh.generation} dofs={mesh.dof_count} "
             f"nodes={mesh.node_count} elements={mesh.element_count}"]
    if mesh.dim == 1:
        lines += [f"{x:.17g} {v:.17g}" for x, v in zip(mesh.nodes, u.values)]
    else:
        lines += [f"{p[0]:.17g} {p[1]:.17g} {v:.17g}"
                  for p, v in zip(mesh.nodes, u.values)]
    lines += [" ".join(str(idx) for idx in el) for el in mesh.elements]
    Path(path).write_text("\n".join(lines) + "\n")


_EXIT_BY_TERMINATION = {
    Termination.TOLERANCE: EXIT_TOLERANCE,
    Termination.DOF_BUDGET: EXIT_BUDGET,
    Termination.ITERATION_BUDGET: EXIT_BUDGET,
}


def _summary(cfg: CliConfig, records, termination: str, exit_code: int):
    newton = sum(1 for r in records if r.action == "NEWTON")
    refine = sum(1 for r in records if r.action == "REFINE")
    final = records[-1] if records else None
    return {
        "problem": cfg.problem,
        "epsilon": cfg.epsilon,
        "termination": termination,
        "exit_code": exit_code,
        "final_estimate": final.estimate_total if final else None,
        "final_dofs": final.dofs if final else None,
        "iterations": {"total": len(records), "newton": newton,
                       "refine": refine},
    }


def run(config_path) -> int:
    """Execute one configured experiment; returns the process exit code."""
    cfg = parse_config(config_path)
    problem, mesh, guess, run_config = build_run(cfg)
    try:
        result = adaptive_solve(problem, mesh, guess, run_config)
    except AdaptiveSolveError as exc:
        write_records_csv(cfg.records_csv, exc.records)
        summary = _summary(cfg, exc.records, "solver failure",
                           EXIT_SOLVER_FAILURE)
        summary["error"] = str(exc)
        Path(cfg.summary_json).write_text(json.dumps(summary, indent=2) + "\n")
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    exit_code = _EXIT_BY_TERMINATION[result.termination]
    write_records_csv(cfg.records_csv, result.records)
    summary = _summary(cfg, result.records, result.termination.value,
                       exit_code)
    Path(cfg.summary_json).write_text(json.dumps(summary, indent=2) + "\n")
    if cfg.solution_dump:
        write_solution_dump(cfg.solution_dump, result.solution)
    final = result.records[-1]
    print(f"{cfg.problem}: {result.termination.value} after "
          f"{len(result.records)} passes, estimate {final.estimate_total:.6e} "
          f"at {final.dofs} dofs")
    return exit_code


# ---------------------------------------------------------------------------
# efficiency tables
# ---------------------------------------------------------------------------

def efficiency_table(records_by_label: dict) -> list[tuple]:
    """Rows (label, pass index, dofs, efficiency) for exact-solution runs.

    Refuses record sets without true-error data (problems lacking an exact
    solution).
    """
    rows = []
    for label, records in records_by_label.items():
        for i, r in enumerate(records):
            if r.efficiency is None:
                raise ValueError(
                    f"records for {label!r} carry no efficiency data "
                    "(problem has no exact solution)")
            rows.append((label, i, r.dofs, r.efficiency))
    return rows


def format_efficiency_table(rows) -> str:
    header = f"{'label':>16} {'pass':>6} {'dofs':>8} {'efficiency':>14}"
    lines = [header]
    for label, i, dofs, eff in rows:
        lines.append(f"{label:>16} {i:>6} {dofs:>8} {eff:>14.6e}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="newton-galerkin",
        description="Adaptive Newton-Galerkin solver for semilinear "
                    "reaction-diffusion problems")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("config", help="path to a key = value config file")
    p_eff = sub.add_parser("efficiency",
                           help="tabulate efficiency indices from record CSVs")
    p_eff.add_argument("csv", nargs="+", help="record CSV files")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            return run(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        table = efficiency_table(
            {Path(p).stem: read_records_csv(p) for p in args.csv})
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(format_efficiency_table(table))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
