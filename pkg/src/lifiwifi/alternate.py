"""Alternating drivers over (power split, probability vectors).

``optimize_exact`` alternates water-filling with projected gradient on the
exact rate; ``optimize_lb`` alternates the lower-bound allocation with
Frank-Wolfe on the lower bound.  In the probability step each link's
electrical cap is tightened so that the new distribution keeps the
current allocation inside the total budget.
"""
from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from .constellation import FeasibleSet, moments, project_feasible
from .errors import ConfigError
from .power import PowerAllocation, PowerBudget, budget_coefficients, lb_allocate, wf_allocate
from .probopt import (ExactRateObjective, FWConfig, LowerBoundObjective, PGDConfig, fw_run,
                      pgd_run)
from .quadrature import QuadratureSpec
from .rate import LinkPhysics, bounds_aggregate, rate_aggregate


@dataclass(frozen=True)
class Problem:
    """Everything a driver needs: constellations (start point), links and budget."""

    optical: object
    rf: object
    phys1: LinkPhysics
    phys2: LinkPhysics
    budget: PowerBudget
    quad: QuadratureSpec = QuadratureSpec()


@dataclass(frozen=True)
class AlternatingConfig:
    objective: str = "exact"
    outer_tol: float = None  # bits/s; default scales with total bandwidth
    max_outer: int = 50
    pgd: PGDConfig = PGDConfig()
    fw: FWConfig = FWConfig()
    wf_tol: float = 1e-8
    lb_tol: float = 1e-8
    budget_uses_caps: bool = False

    def __post_init__(self):
        if self.objective not in ("exact", "lower_bound"):
            raise ConfigError(f"unknown objective {self.objective!r}", "solver.objective")
        if self.outer_tol is not None and not self.outer_tol > 0:
            raise ConfigError("must be > 0", "solver.outer_tol")
        if self.max_outer < 1:
            raise ConfigError("must be >= 1", "solver.max_outer")

    def tol_for(self, problem: Problem) -> float:
        if self.outer_tol is not None:
            return self.outer_tol
        return 1e-4 * (problem.phys1.bandwidth + problem.phys2.bandwidth)


@dataclass
class Solution:
    objective: str
    optical: object
    rf: object
    allocation: PowerAllocation
    trace: list
    best_trace: list
    converged: bool
    value: float
    rate_total: float = math.nan
    lower_total: float = math.nan
    upper_total: float = math.nan
    rate_std: float = 0.0
    budget_slack: float = math.nan
    budget_scale: float = 1.0
    inner_converged: list = field(default_factory=list)
    trace_std: list = field(default_factory=list)  # estimator std per trace entry

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_dict(self):
        return {
            "objective": self.objective,
            "value": self.value,
            "rate_total": self.rate_total,
            "lower_total": self.lower_total,
            "upper_total": self.upper_total,
            "rate_std": self.rate_std,
            "q1_sq": self.allocation.q1_sq,
            "q2_sq": self.allocation.q2_sq,
            "budget_slack": self.budget_slack,
            "budget_tight": bool(abs(self.budget_slack) <= 1e-6 * max(1.0, self.budget_scale)),
            "converged": self.converged,
            "iterations": self.iterations,
            "trace": list(self.trace),
            "best_trace": list(self.best_trace),
            "trace_std": list(self.trace_std),
            "optical": self.optical.to_dict(),
            "rf": self.rf.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outer_iter", "objective", "best"])
        for i, (r, b) in enumerate(zip(self.trace, self.best_trace)):
            w.writerow([i, repr(float(r)), repr(float(b))])
        return buf.getvalue()


def _start(problem, start=None):
    """Projected-uniform distributions, or the given (optical, rf) pair projected."""
    if start is None:
        p1 = np.full(problem.optical.size, 1.0 / problem.optical.size)
        p2 = np.full(problem.rf.size, 1.0 / problem.rf.size)
    else:
        p1, p2 = start[0].probs, start[1].probs
    c1 = problem.optical.with_probs(project_feasible(p1, problem.optical.feasible_set()))
    c2 = problem.rf.with_probs(project_feasible(p2, problem.rf.feasible_set()))
    return c1, c2


def _nothing_to_shape(c1, c2) -> bool:
    return c1.size == 1 and c2.size == 1


def _tightened_set(c, q_sq, amp_eff, headroom):
    """Feasible set with the electrical cap lowered to what the budget leaves."""
    fset = c.feasible_set()
    if q_sq <= 0 or not math.isfinite(headroom):
        return fset
    limit = max(headroom / (amp_eff * q_sq), 0.0)
    _, eps = moments(c)
    # Keep the current distribution feasible despite rounding.
    limit = max(limit, min(eps, c.elec_cap))
    if fset.kind == "optical":
        rows = [c.points] if math.isfinite(c.mean_cap) else []
        bounds = [c.mean_cap] if rows else []
        rows.append(c.points**2)
        bounds.append(min(c.elec_cap, limit))
        return FeasibleSet("optical", c.size, np.array(rows), np.array(bounds))
    return FeasibleSet("rf", c.size, np.abs(c.points)[None, :] ** 2,
                      np.array([min(c.elec_cap, limit)]))


def _prob_step(problem, cfg, c1, c2, alloc, make_obj, run, inner_cfg):
    """Optimise p1 then p2 at fixed allocation; each keeps the budget feasible."""
    P = problem.budget.total_elec
    uses_caps = cfg.budget_uses_caps
    flags = []
    if c1.size > 1:
        k1, k2 = budget_coefficients(c1, c2, problem.phys1, problem.phys2, uses_caps)
        headroom = math.inf if uses_caps else P - k2 * alloc.q2_sq
        fs1 = _tightened_set(c1, alloc.q1_sq, problem.phys1.amp_efficiency, headroom)
        res = run(make_obj(c1, alloc.q1_sq, problem.phys1), fs1, c1.probs, inner_cfg)
        c1 = c1.with_probs(res.probs)
        flags.append(res.converged)
    if c2.size > 1:
        k1, k2 = budget_coefficients(c1, c2, problem.phys1, problem.phys2, uses_caps)
        headroom = math.inf if uses_caps else P - k1 * alloc.q1_sq
        fs2 = _tightened_set(c2, alloc.q2_sq, problem.phys2.amp_efficiency, headroom)
        res = run(make_obj(c2, alloc.q2_sq, problem.phys2), fs2, c2.probs, inner_cfg)
        c2 = c2.with_probs(res.probs)
        flags.append(res.converged)
    return c1, c2, flags


def _finish(problem, cfg, kind, best, trace, best_trace, converged, flags, stds=None):
    value, c1, c2, alloc = best
    report = rate_aggregate(c1, alloc.q1_sq, problem.phys1, c2, alloc.q2_sq, problem.phys2,
                            problem.quad)
    k1, k2 = budget_coefficients(c1, c2, problem.phys1, problem.phys2, cfg.budget_uses_caps)
    slack = problem.budget.total_elec - alloc.spend(k1, k2)
    return Solution(kind, c1, c2, alloc, trace, best_trace, converged, value,
                    report.rate_total, report.lower_total, report.upper_total,
                    report.std_total, slack, problem.budget.total_elec, flags,
                    list(stds) if stds else [0.0] * len(trace))


def optimize_exact(problem: Problem, cfg: AlternatingConfig = AlternatingConfig(),
                   start=None) -> Solution:
    """Water-filling split, then alternate (probabilities, split) until the rate settles."""
    tol = cfg.tol_for(problem)
    quad = problem.quad
    c1, c2 = _start(problem, start)

    def alloc_for(a, b):
        return wf_allocate(a, b, problem.phys1, problem.phys2, problem.budget, cfg.wf_tol,
                           cfg.budget_uses_caps)

    stds = []

    def total(a, b, al):
        rep = rate_aggregate(a, al.q1_sq, problem.phys1, b, al.q2_sq, problem.phys2, quad)
        stds.append(rep.std_total)
        return rep.rate_total

    def make_obj(c, q, phys):
        return ExactRateObjective(c, q, phys, quad, cfg.pgd.truncation_obj,
                                  cfg.pgd.truncation_grad)

    alloc = alloc_for(c1, c2)
    R = total(c1, c2, alloc)
    trace, best_trace = [R], [R]
    best = (R, c1, c2, alloc)
    converged, flags = False, []
    if _nothing_to_shape(c1, c2):
        return _finish(problem, cfg, "exact", best, trace, best_trace, True, flags, stds)
    for _ in range(cfg.max_outer - 1):
        c1, c2, f = _prob_step(problem, cfg, c1, c2, alloc, make_obj, pgd_run, cfg.pgd)
        flags.extend(f)
        alloc = alloc_for(c1, c2)
        R_new = total(c1, c2, alloc)
        trace.append(R_new)
        if R_new > best[0]:
            best = (R_new, c1, c2, alloc)
        best_trace.append(best[0])
        if abs(R_new - R) <= tol:
            converged = True
            break
        R = R_new
    else:
        converged = cfg.max_outer == 1
    return _finish(problem, cfg, "exact", best, trace, best_trace, converged, flags, stds)


def optimize_lb(problem: Problem, cfg: AlternatingConfig = AlternatingConfig(),
                start=None) -> Solution:
    """Lower-bound split, then alternate (split, probabilities) until the bound settles."""
    tol = cfg.tol_for(problem)
    c1, c2 = _start(problem, start)

    def alloc_for(a, b):
        return lb_allocate(a, b, problem.phys1, problem.phys2, problem.budget, cfg.lb_tol,
                           cfg.budget_uses_caps)[0]

    def lower(a, b, al):
        return bounds_aggregate(a, al.q1_sq, problem.phys1, b, al.q2_sq, problem.phys2)[0]

    alloc = alloc_for(c1, c2)
    R = lower(c1, c2, alloc)
    trace, best_trace = [R], [R]
    best = (R, c1, c2, alloc)
    converged, flags = False, []
    if _nothing_to_shape(c1, c2):
        return _finish(problem, cfg, "lower_bound", best, trace, best_trace, True, flags)
    for _ in range(cfg.max_outer - 1):
        alloc = alloc_for(c1, c2)
        c1, c2, f = _prob_step(problem, cfg, c1, c2, alloc, LowerBoundObjective, fw_run, cfg.fw)
        flags.extend(f)
        R_new = lower(c1, c2, alloc)
        trace.append(R_new)
        if R_new > best[0]:
            best = (R_new, c1, c2, alloc)
        best_trace.append(best[0])
        if abs(R_new - R) <= tol:
            converged = True
            break
        R = R_new
    else:
        converged = cfg.max_outer == 1
    return _finish(problem, cfg, "lower_bound", best, trace, best_trace, converged, flags)


def equiprobable_solution(problem: Problem, cfg: AlternatingConfig = AlternatingConfig()) -> Solution:
    """Baseline: projected-uniform distributions, split by the objective's own allocation rule."""
    c1, c2 = _start(problem)
    if cfg.objective == "lower_bound":
        alloc = lb_allocate(c1, c2, problem.phys1, problem.phys2, problem.budget, cfg.lb_tol,
                            cfg.budget_uses_caps)[0]
    else:
        alloc = wf_allocate(c1, c2, problem.phys1, problem.phys2, problem.budget, cfg.wf_tol,
                            cfg.budget_uses_caps)
    R = rate_aggregate(c1, alloc.q1_sq, problem.phys1, c2, alloc.q2_sq, problem.phys2,
                       problem.quad).rate_total
    return _finish(problem, cfg, "equiprobable", (R, c1, c2, alloc), [R], [R], True, [])
