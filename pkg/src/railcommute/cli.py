"""Command-line front end: solve, analytic, optimize, sweep and check.

Every command that writes files also writes ``config.resolved.cfg`` and a
``manifest.json`` listing each file with its SHA-256 checksum.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .closed_form import (
    classify_pattern,
    closed_form_tc,
    fccf_exists,
    omega_ratio,
    regime_thresholds,
    tc_fcf_sensitivity,
    zeta_factors,
)
from .config import ExperimentConfig, apply_overrides, load_config, parse_config
from .core import fd_flow, min_travel_time
from .equilibrium import cumulative_curves, solve_wt1, solve_wt2
from .errors import (
    ConfigError,
    ConfigValidationError,
    DomainError,
    EmptyResultError,
    FeasibilityError,
    InfeasibleStateError,
    NoRealSolutionError,
    SolverError,
)
from .timetable import TwoLevelTimetable, grid_optimize, solve_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_NONCONVERGED = 5

TRAINS_HEADER = ["n", "t_arr_h", "t_dep_h", "T_h", "h_a_h", "h_d_h", "q_trph", "k_trpkm", "a_p_paxph", "regime"]
CURVES_HEADER = ["t_h", "A", "D", "Ap", "Dp"]
SURFACE_HEADER = ["a1_trph", "a2_trph", "tc_usd"]
SWEEP_HEADER = ["param", "value", "tc_closed", "tc_numeric", "pattern"]
BREAKDOWN_HEADER = ["scenario", "a1_trph", "a2_trph", "mean_inflow_trph", "sum_tdc", "sum_sdc", "sum_tc", "tc_e", "tc_increase_pct"]

SWEEP_PARAMS = {"Np": "N_p", "ac": "a_c", "alpha": "alpha", "beta": "beta", "gamma": "gamma"}


class UsageError(Exception):
    """Arguments are well-formed but do not fit the command."""


def fmt(x) -> str:
    """Nine significant digits; ``INF`` for infinities, ``NA`` for missing."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    if isinstance(x, float) and math.isinf(x):
        return "INF"
    return format(float(x), ".9g")


class OutputDir:
    """Single writer for one command's files; records checksums in write order."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> Path:
        data = text.encode("utf-8")
        target = self.path / name
        target.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return target

    def write_csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return self.write_text(name, buf.getvalue())

    def finish(self, command: str, config: ExperimentConfig, started: float, diagnostics: dict) -> None:
        manifest = {
            "tool": "railcommute",
            "version": __version__,
            "command": command,
            "config": config.to_text(),
            "wall_clock_s": round(time.perf_counter() - started, 3),
            "diagnostics": diagnostics,
            "files": [{"name": n, "sha256": h} for n, h in self.files.items()],
        }
        (self.path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def summary_text(pairs) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_summary_text(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep:
            out[key.strip()] = value.strip()
    return out


def read_summary(path) -> dict[str, str]:
    return parse_summary_text(Path(path).read_text(encoding="utf-8"))


def _start(out_dir, config: ExperimentConfig) -> OutputDir:
    out = OutputDir(out_dir)
    out.write_text("config.resolved.cfg", config.to_text())
    return out


# solve


def train_rows(solution):
    for s in solution.trains:
        yield [fmt(s.n), fmt(s.t_arr), fmt(s.t_dep), fmt(s.T), fmt(s.h_a), fmt(s.h_d), fmt(s.q), fmt(s.k), fmt(s.a_p), s.regime.value]


def curve_rows(solution, dt):
    if solution.demand.N_p <= 0:
        return
    c = cumulative_curves(solution, dt)
    for row in zip(c.t, c.A, c.D, c.Ap, c.Dp):
        yield [fmt(v) for v in row]


def solution_summary(solution) -> list:
    b = solution.breakdown
    pattern = solution.pattern if solution.trains else "none"
    return [
        ("case", solution.case),
        ("tc_e", solution.TC_e),
        ("t0_h", solution.t0),
        ("tm_h", solution.tm),
        ("ted_h", solution.ted),
        ("pattern", pattern),
        ("sum_tdc", b.sum_TDC),
        ("sum_sdc", b.sum_SDC),
        ("sum_tc", b.sum_TC),
        ("n_p", float(solution.demand.N_p)),
        ("passengers", solution.passengers),
        ("iterations", solution.iterations),
        ("converged", str(solution.converged).lower()),
    ]


def cmd_solve(config: ExperimentConfig, case: str, out_dir) -> int:
    started = time.perf_counter()
    if case == "wt2":
        if config.demand_wt2 is None:
            raise UsageError("case wt2 needs w_p in the config")
        if config.wt2_failures:
            raise ConfigValidationError(config.wt2_failures)
        solution = solve_wt2(config.params, config.cost, config.demand_wt2, config.inflow, **config.solver_options())
    else:
        solution = solve_wt1(config.params, config.cost, config.demand, config.inflow, **config.solver_options())
    out = _start(out_dir, config)
    out.write_csv("trains.csv", TRAINS_HEADER, train_rows(solution))
    out.write_csv("curves.csv", CURVES_HEADER, curve_rows(solution, config.dt))
    out.write_text("summary.txt", summary_text(solution_summary(solution)))
    out.finish(f"solve --case {case}", config, started, {"iterations": solution.iterations, "converged": solution.converged})
    print(f"TC_e = {solution.TC_e:.6g} $, pattern {solution.pattern if solution.trains else 'none'}, "
          f"{solution.iterations} evaluations; wrote {out.path}")
    if not solution.converged:
        print(f"error: conservation gap {solution.passengers - solution.demand.N_p:.6g} pax exceeds eps_p", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# analytic


def analytic_report(config: ExperimentConfig) -> list:
    if not config.is_constant_inflow:
        raise UsageError("analytic needs a constant inflow (a_c)")
    a_c, cost, params = config.constant_rate, config.cost, config.params
    N_p = config.demand.N_p
    z1, z2 = zeta_factors(cost)
    th = regime_thresholds(a_c, cost, params)
    report = classify_pattern(N_p, a_c, cost, params, config.solver_options())
    try:
        sensitivity = tc_fcf_sensitivity(N_p, a_c, cost, params) if report.pattern == "FCF" else None
    except NoRealSolutionError:
        sensitivity = None
    return [
        ("a_c", a_c),
        ("n_p", float(N_p)),
        ("zeta1", z1),
        ("zeta2", z2),
        ("omega", omega_ratio(cost)),
        ("t0_free_h", min_travel_time(params)),
        ("tc_ff_max", th.TC_FF),
        ("tc_fcf_max", th.TC_FCF),
        ("tc_fccf_max", th.TC_FCCF),
        ("n_p_ff", th.N_p_FF),
        ("n_p_fcf", th.N_p_FCF),
        ("fccf_exists", str(fccf_exists(a_c, cost, params)).lower()),
        ("pattern", report.pattern),
        ("tc_e", report.TC_e),
        ("tc_closed", closed_form_tc(N_p, a_c, cost, params)),
        ("sensitivity", sensitivity),
    ]


def cmd_analytic(config: ExperimentConfig) -> int:
    sys.stdout.write(summary_text((k, fmt(v) if v is None else v) for k, v in analytic_report(config)))
    return EXIT_OK


# optimize


def parse_scenario(text: str) -> tuple[str | None, float, float]:
    """``NAME:a1,a2`` or ``a1,a2``."""
    name, sep, rest = text.rpartition(":")
    try:
        a1, a2 = (float(v) for v in rest.split(","))
    except ValueError:
        raise UsageError(f"scenario {text!r} is not [NAME:]a1,a2") from None
    return (name or None) if sep else None, a1, a2


def breakdown_rows(config: ExperimentConfig, result, scenarios):
    cost = config.cost
    rows = [("optimum", result.best[0], result.best[1], result.breakdown)]
    for i, (name, a1, a2) in enumerate(scenarios, start=1):
        try:
            sol = solve_scenario(a1, a2, config.params, cost, config.demand, **config.solver_options())
            rows.append((name or f"S{i}", a1, a2, sol.breakdown))
        except InfeasibleStateError:
            rows.append((name or f"S{i}", a1, a2, None))
    base = result.breakdown.sum_TC
    for name, a1, a2, b in rows:
        mean = TwoLevelTimetable(a1, a2).mean_inflow(cost)
        if b is None:
            yield [name, fmt(a1), fmt(a2), fmt(mean), "INF", "INF", "INF", "INF", "INF"]
        else:
            pct = 100 * (b.sum_TC / base - 1)
            yield [name, fmt(a1), fmt(a2), fmt(mean), fmt(b.sum_TDC), fmt(b.sum_SDC), fmt(b.sum_TC), fmt(b.TC_e), fmt(pct)]


def _surface_rows(surface):
    return ([fmt(r.a1), fmt(r.a2), fmt(r.TC_e)] for r in surface)


def cmd_optimize(config: ExperimentConfig, a0: float, step: float, out_dir, scenarios=(), workers: int = 1) -> int:
    started = time.perf_counter()
    if not (a0 > 0 and step > 0):
        raise UsageError("a0 and step must be positive")
    try:
        result = grid_optimize(config.params, config.cost, config.demand, a0, step, workers=workers, **config.solver_options())
    except EmptyResultError as err:
        out = _start(out_dir, config)
        out.write_csv("surface.csv", SURFACE_HEADER, _surface_rows(err.surface or []))
        out.finish(f"optimize --a0 {a0} --step {step}", config, started, {"cells": len(err.surface or []), "feasible_cells": 0})
        raise
    out = _start(out_dir, config)
    out.write_csv("surface.csv", SURFACE_HEADER, _surface_rows(result.surface))
    out.write_csv("breakdown.csv", BREAKDOWN_HEADER, breakdown_rows(config, result, scenarios))
    b = result.breakdown
    feasible = sum(r.feasible for r in result.surface)
    out.write_text("summary.txt", summary_text([
        ("a0", float(a0)),
        ("step", float(step)),
        ("a1", float(result.best[0])),
        ("a2", float(result.best[1])),
        ("tc_e", result.TC_e),
        ("t0_h", result.solution.t0),
        ("tm_h", result.solution.tm),
        ("ted_h", result.solution.ted),
        ("pattern", result.solution.pattern),
        ("sum_tdc", b.sum_TDC),
        ("sum_sdc", b.sum_SDC),
        ("sum_tc", b.sum_TC),
        ("cells", len(result.surface)),
        ("feasible_cells", feasible),
        ("nonconverged_cells", len(result.nonconverged)),
        ("iterations", result.solution.iterations),
    ]))
    out.finish(f"optimize --a0 {a0} --step {step}", config, started, {
        "cells": len(result.surface), "feasible_cells": feasible, "nonconverged_cells": len(result.nonconverged),
    })
    print(f"optimum a1={result.best[0]:g}, a2={result.best[1]:g}, TC_e={result.TC_e:.6g} $; wrote {out.path}")
    return EXIT_OK


# sweep


def _float_range(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9))
    if count < 0:
        raise UsageError("--to must not be below --from")
    return [round(start + i * step, 12) for i in range(count + 1)]


def sweep_rows(config: ExperimentConfig, param: str, values):
    if param not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    if not config.is_constant_inflow:
        raise UsageError("sweep needs a constant inflow (a_c)")
    key = SWEEP_PARAMS[param]
    base = apply_overrides(config, [f"a_c={config.constant_rate!r}"])
    for value in values:
        try:
            cfg = apply_overrides(base, [f"{key}={value!r}"])
        except ConfigValidationError:
            yield [param, fmt(value), "NA", "NA", "Invalid"]
            continue
        a_c, N_p = cfg.a_c, cfg.demand.N_p
        tc_closed = closed_form_tc(N_p, a_c, cfg.cost, cfg.params)
        try:
            sol = solve_wt1(cfg.params, cfg.cost, cfg.demand, cfg.inflow, detail=False, **cfg.solver_options())
            tc_numeric, pattern = sol.TC_e, sol.pattern if N_p > 0 else "none"
            if not sol.converged:
                pattern = "Nonconverged"
        except InfeasibleStateError:
            tc_numeric, pattern = math.inf, "Infeasible"
        except SolverError:
            tc_numeric, pattern = math.nan, "Nonconverged"
        yield [param, fmt(value), fmt(tc_closed), fmt(tc_numeric), pattern]


def cmd_sweep(config: ExperimentConfig, param: str, start: float, stop: float, step: float, out_dir) -> int:
    started = time.perf_counter()
    rows = list(sweep_rows(config, param, _float_range(start, stop, step)))
    out = _start(out_dir, config)
    out.write_csv("sweep.csv", SWEEP_HEADER, rows)
    out.finish(f"sweep --param {param}", config, started, {"rows": len(rows)})
    print(f"{len(rows)} rows; wrote {out.path / 'sweep.csv'}")
    return EXIT_OK


# check


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def check_directory(path) -> list[str]:
    """Re-validate a command's outputs; returns the list of violated checks."""
    path = Path(path)
    problems = []
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        return ["manifest.json missing"]
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for entry in manifest["files"]:
        target = path / entry["name"]
        if not target.exists():
            problems.append(f"{entry['name']}: listed but missing")
        elif hashlib.sha256(target.read_bytes()).hexdigest() != entry["sha256"]:
            problems.append(f"{entry['name']}: checksum mismatch")
    listed = {e["name"] for e in manifest["files"]} | {"manifest.json"}
    for extra in sorted(p.name for p in path.iterdir() if p.is_file() and p.name not in listed):
        problems.append(f"{extra}: not in manifest")
    config = parse_config(manifest["config"])

    if (path / "trains.csv").exists() and (path / "summary.txt").exists():
        problems += _check_solution(path, config)
    if (path / "surface.csv").exists():
        header, rows = _read_csv(path / "surface.csv")
        if header != SURFACE_HEADER:
            problems.append("surface.csv: wrong header")
    return problems


def _check_solution(path, config: ExperimentConfig) -> list[str]:
    problems = []
    header, rows = _read_csv(path / "trains.csv")
    if header != TRAINS_HEADER:
        return ["trains.csv: wrong header"]
    summary = read_summary(path / "summary.txt")
    if not rows:
        return [] if float(summary["n_p"]) == 0 else ["trains.csv: empty body for positive demand"]
    data = np.array([[float(v) for v in r[:-1]] for r in rows])
    n, t_arr, t_dep, T, h_a, h_d, q, k, a_p = data.T
    h_bar = 0.5 * (h_a + h_d)
    served = float(np.trapezoid(a_p * h_bar, n))
    N_p = float(summary["n_p"])
    if abs(served - N_p) > config.eps_p:
        problems.append(f"conservation: served {served:.6g} vs N_p {N_p:.6g}")
    params, cost = config.params, config.cost
    for i in range(len(rows)):
        expected = fd_flow(k[i], min(max(a_p[i], 0.0), params.mu * (1 - 1e-12)), params)
        if abs(expected - q[i]) > 1e-6 * max(abs(q[i]), 1.0):
            problems.append(f"fd consistency: train row {i + 1} q={q[i]:.9g} vs Q={expected:.9g}")
            break
    if summary.get("case") == "wt1":
        tc_e = float(summary["tc_e"])
        t_star = config.demand.t_star
        sdc = np.where(t_dep < t_star, cost.beta * (t_star - t_dep), cost.gamma * (t_dep - t_star))
        tc = cost.alpha * (T - min_travel_time(params)) + sdc
        worst = float(np.max(np.abs(tc - tc_e)))
        if worst > 1e-6 * max(tc_e, 1.0):
            problems.append(f"cost constancy: max deviation {worst:.3g} $")
    return problems


def cmd_check(directory) -> int:
    problems = check_directory(directory)
    for p in problems:
        print(f"FAIL {p}")
    if problems:
        return EXIT_VALIDATION
    print(f"OK {directory}")
    return EXIT_OK


# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="railcommute", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
        return p

    p = with_config(sub.add_parser("solve", help="equilibrium for one scenario"))
    p.add_argument("--case", choices=("wt1", "wt2"), default="wt1")
    p.add_argument("--out", help="output directory (default: config 'out')")

    with_config(sub.add_parser("analytic", help="closed-form report for constant inflow"))

    p = with_config(sub.add_parser("optimize", help="grid search over two-level timetables"))
    p.add_argument("--a0", type=float, help="max average inflow, tr/h (default: config a0)")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--scenario", action="append", default=[], metavar="[NAME:]A1,A2", help="extra breakdown row")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    p = with_config(sub.add_parser("sweep", help="closed-form and numeric cost over one parameter"))
    p.add_argument("--param", required=True, help=", ".join(SWEEP_PARAMS))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out")

    p = sub.add_parser("check", help="re-validate an output directory")
    p.add_argument("--dir", required=True)
    return parser


def _out_dir(args, config):
    out = args.out or config.out
    if not out:
        raise UsageError("no output directory: pass --out or set 'out' in the config")
    return out


def run(args) -> int:
    if args.command == "check":
        return cmd_check(args.dir)
    config = apply_overrides(load_config(args.config), args.set)
    if args.command == "solve":
        return cmd_solve(config, args.case, _out_dir(args, config))
    if args.command == "analytic":
        return cmd_analytic(config)
    if args.command == "optimize":
        a0 = args.a0 if args.a0 is not None else config.a0
        if a0 is None:
            raise UsageError("no a0: pass --a0 or set it in the config")
        scenarios = [parse_scenario(s) for s in args.scenario]
        if not scenarios and config.a1 is not None and config.a2 is not None:
            scenarios = [("config", config.a1, config.a2)]
        return cmd_optimize(config, a0, args.step, _out_dir(args, config), scenarios, args.workers)
    if args.command == "sweep":
        return cmd_sweep(config, args.param, args.start, args.stop, args.step, _out_dir(args, config))
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError, FeasibilityError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleStateError, EmptyResultError) as err:
        train = getattr(err, "train", None)
        where = f" (train {train:g})" if isinstance(train, (int, float)) else ""
        print(f"error: infeasible equilibrium{where}: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as err:
        print(f"error: solver did not converge: {err}", file=sys.stderr)
        return EXIT_NONCONVERGED


__all__ = ["main", "build_parser", "cmd_solve", "cmd_analytic", "cmd_optimize", "cmd_sweep", "cmd_check", "check_directory"]
