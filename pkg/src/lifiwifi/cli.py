"""Command-line front end: ``lifiwifi {rate,optimize,sweep,selftest}``.

Exit codes: 0 ok, 1 selftest failure, 2 bad configuration, 3 infeasible
constraints, 4 solver did not converge (outputs are still written).

All CSV output starts with a ``# schema=1`` comment line and writes floats
with ``repr`` so reruns with the same seed are byte-identical.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import replace
import io
import json
import math
import os
import sys

import numpy as np

from .alternate import equiprobable_solution, optimize_exact, optimize_lb
from .constellation import moments, project_feasible
from .errors import BracketError, ConfigError, ConvergenceError, DomainError, InfeasibleError
from .probopt import fw_optimize, pgd_optimize
from .rate import CSV_COLUMNS, rate_aggregate
from .scenario import Scenario, fixed_allocation

SCHEMA_LINE = "# schema=1"
EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 1, 2, 3, 4
AXES = ("P_T", "P_ins", "B1", "snr")
OBJECTIVES = {"exact": "exact", "lower": "lower_bound"}
# Sample count used when --quadrature mc replaces a deterministic rule.
MC_POINTS = 20000
# P_ins sweeps tie the average optical limit to the instantaneous one.
P_O_PER_P_INS = 0.8
SWEEP_COLUMNS = ("axis", "x", "solver", "method", "value", "rate_lifi", "rate_wifi",
                 "rate_total", "lower", "upper", "rate_std", "q1_sq", "q2_sq", "snr1", "snr2",
                 "converged")
METHODS = ("optimized", "equiprobable", "lower_bound", "upper_bound")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def parse_range(text: str, axis: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"expected a:b:n, got {text!r}", "--range")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"expected a:b:n, got {text!r}", "--range") from None
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise ConfigError("need finite endpoints and n >= 1", "--range")
    if n > 1 and not a < b:
        raise ConfigError("range must be increasing", "--range")
    if axis != "snr" and a <= 0:
        raise ConfigError(f"{axis} values must be > 0", "--range")
    return np.linspace(a, b, n) if n > 1 else np.array([a])


def apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scenario = scenario.with_seed(args.seed)
    method = getattr(args, "quadrature", None)
    if method:
        quad = replace(scenario.quad, method=method)
        if quad.stochastic and not scenario.quad.stochastic:
            quad = replace(quad, order=max(quad.order, MC_POINTS))
        scenario = replace(scenario, quad=quad)
    objective = getattr(args, "objective", None)
    if objective:
        scenario = replace(scenario, solver=replace(scenario.solver,
                                                    objective=OBJECTIVES[objective]))
    return scenario


def apply_axis(scenario: Scenario, axis: str, x: float) -> Scenario:
    """Scenario at one sweep point; the snr axis is handled by the caller."""
    if axis == "P_T":
        return replace(scenario, budget=replace(scenario.budget, total_elec=float(x)))
    if axis == "P_ins":
        return replace(scenario, budget=replace(scenario.budget, max_inst_optical=float(x),
                                                max_avg_optical=P_O_PER_P_INS * float(x)))
    if axis == "B1":
        return replace(scenario, physics=replace(scenario.physics, B1=float(x)))
    return scenario


def _solve(scenario: Scenario):
    problem = scenario.problem()
    cfg = scenario.solver
    run = optimize_lb if cfg.objective == "lower_bound" else optimize_exact
    return problem, run(problem, cfg), equiprobable_solution(problem, cfg)


def _design_rows(axis, x, solver, problem, designs):
    """designs: (method, c1, c2, q1, q2, converged); bound rows reuse the optimized design."""
    rows = []
    for method, c1, c2, q1, q2, ok in designs:
        rep = rate_aggregate(c1, q1, problem.phys1, c2, q2, problem.phys2, problem.quad)
        value = {"lower_bound": rep.lower_total, "upper_bound": rep.upper_total}.get(
            method, rep.rate_total)
        rows.append((axis, float(x), solver, method, value, rep.rate_lifi, rep.rate_wifi,
                     rep.rate_total, rep.lower_total, rep.upper_total, rep.std_total, q1, q2,
                     rep.snr1, rep.snr2, ok))
    return rows


def _snr_point(scenario: Scenario, x_db: float):
    """Both links at a fixed amplification giving SNR x_db under the equiprobable start."""
    problem = scenario.problem()
    solver = scenario.solver
    target = 10.0 ** (x_db / 10.0)
    cs, qs, opt, ok = [], [], [], True
    for c, phys in ((problem.optical, problem.phys1), (problem.rf, problem.phys2)):
        start = c.with_probs(project_feasible(np.full(c.size, 1.0 / c.size), c.feasible_set()))
        eps = moments(start)[1]
        q = target / (phys.snr_per_unit_power() * eps) if eps > 0 else 0.0
        if solver.objective == "lower_bound":
            res = fw_optimize(start, q, phys, cfg=solver.fw)
        else:
            res = pgd_optimize(start, q, phys, cfg=solver.pgd, quad=problem.quad)
        ok = ok and res.converged
        cs.append(start)
        qs.append(q)
        opt.append(start.with_probs(res.probs))
    return problem, [("optimized", opt[0], opt[1], qs[0], qs[1], ok),
                     ("equiprobable", cs[0], cs[1], qs[0], qs[1], True),
                     ("lower_bound", opt[0], opt[1], qs[0], qs[1], ok),
                     ("upper_bound", opt[0], opt[1], qs[0], qs[1], ok)]


def sweep_point(scenario: Scenario, axis: str, x: float):
    """All rows for one grid point; module-level so worker processes can run it."""
    solver = "lower" if scenario.solver.objective == "lower_bound" else "exact"
    if axis == "snr":
        problem, designs = _snr_point(scenario, x)
    else:
        problem, sol, base = _solve(apply_axis(scenario, axis, x))
        q1, q2 = sol.allocation.q1_sq, sol.allocation.q2_sq
        designs = [("optimized", sol.optical, sol.rf, q1, q2, sol.converged),
                   ("equiprobable", base.optical, base.rf, base.allocation.q1_sq,
                    base.allocation.q2_sq, True),
                   ("lower_bound", sol.optical, sol.rf, q1, q2, sol.converged),
                   ("upper_bound", sol.optical, sol.rf, q1, q2, sol.converged)]
    return _design_rows(axis, x, solver, problem, designs)


def run_sweep(scenario: Scenario, axis: str, grid, jobs: int = 1):
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map yields in submission order, so rows stay in grid order.
            chunks = list(pool.map(sweep_point, [scenario] * len(grid), [axis] * len(grid),
                                   list(grid)))
    else:
        chunks = [sweep_point(scenario, axis, x) for x in grid]
    return [row for chunk in chunks for row in chunk]


def _write(out_dir, name, text):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load(args) -> Scenario:
    scenario = Scenario.load(args.scenario) if args.scenario else Scenario()
    return apply_overrides(scenario, args)


def cmd_rate(args) -> int:
    scenario = _load(args)
    problem = scenario.problem()
    q1, q2 = fixed_allocation(scenario, problem)
    rep = rate_aggregate(problem.optical, q1, problem.phys1, problem.rf, q2, problem.phys2,
                         problem.quad)
    text = _csv(CSV_COLUMNS, [rep.csv_row()])
    doc = json.loads(rep.to_json())
    doc.update({"q1_sq": q1, "q2_sq": q2})
    _write(args.out, "rate.csv", text)
    _write(args.out, "rate.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(text)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario = _load(args)
    problem = scenario.problem()
    run = optimize_lb if scenario.solver.objective == "lower_bound" else optimize_exact
    sol = run(problem, scenario.solver)
    doc = sol.to_json() + "\n"
    trace = sol.trace_csv()
    _write(args.out, "solution.json", doc)
    _write(args.out, "trace.csv", SCHEMA_LINE + "\n" + trace)
    sys.stdout.write(doc)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    scenario = _load(args)
    grid = parse_range(args.range, args.axis)
    if args.jobs < 1:
        raise ConfigError("must be >= 1", "--jobs")
    rows = run_sweep(scenario, args.axis, grid, args.jobs)
    text = _csv(SWEEP_COLUMNS, rows)
    _write(args.out, "sweep.csv", text)
    sys.stdout.write(text)
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_NONCONVERGED


def cmd_selftest(args) -> int:
    from .selftest import run_all

    return EXIT_OK if run_all(sys.stdout) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="FILE", help="scenario JSON (default scenario if omitted)")
    common.add_argument("--seed", type=int, help="seed for fading draws and Monte Carlo nodes")
    common.add_argument("--quadrature", choices=("gh", "grid", "mc"),
                        help="expectation rule (mc uses at least %d samples)" % MC_POINTS)
    common.add_argument("--out", metavar="DIR", help="also write output files into DIR")

    parser = argparse.ArgumentParser(
        prog="lifiwifi", description="Rates, bounds and joint optimisation for a LiFi/WiFi link pair.",
        epilog="exit codes: 0 ok, 1 selftest failure, 2 bad configuration, 3 infeasible, "
               "4 not converged")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", parents=[common], help="rates and bounds at a fixed allocation")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("optimize", parents=[common], help="joint power/probability optimisation")
    p.add_argument("--objective", choices=tuple(OBJECTIVES), help="exact rate or lower bound")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="optimise over a grid of one parameter")
    p.add_argument("--objective", choices=tuple(OBJECTIVES), help="exact rate or lower bound")
    p.add_argument("--axis", choices=AXES, required=True,
                   help="P_T, P_ins (P_o follows as 0.8 P_ins), B1, or snr in dB")
    p.add_argument("--range", required=True, metavar="a:b:n",
                   help="n evenly spaced values; write --range=-10:20:8 for negative starts")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the built-in oracle checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (BracketError, ConvergenceError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
