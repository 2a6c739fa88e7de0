"""Probability-vector optimisation at a fixed power allocation.

Two objectives share one interface (``value``/``grad`` per unit bandwidth,
lower is better):

* ``ExactRateObjective``: the noise-averaged log-likelihood term of the
  exact rate, with the expectation truncated to a box of noise std
  multiples (one truncation for the value, one for the gradient).
* ``LowerBoundObjective``: the closed-form Jensen bound term
  ``sum_k p_k log2 (A p)_k``.

``pgd_optimize`` runs projected gradient with Armijo backtracking along the
projection arc; ``fw_optimize`` runs Frank-Wolfe with an exact LP vertex
step and a bisection line search on the directional derivative.
"""
from dataclasses import dataclass, field
import csv
import io

import numpy as np

from . import kernels
from .constellation import FeasibleSet, lp_vertex, project_feasible
from .errors import ConfigError
from .quadrature import QuadratureSpec
from .rate import GAP_CONST, LN2, link_model


@dataclass(frozen=True)
class PGDConfig:
    truncation_obj: float = 8.0
    truncation_grad: float = 8.0
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    initial_step: float = 1.0
    stop_tol: float = 1e-7
    max_iters: int = 500
    max_backtracks: int = 60

    def __post_init__(self):
        if not (self.truncation_obj >= 4 and self.truncation_grad >= 4):
            raise ConfigError("truncations must be >= 4", "pgd.truncation")
        if not 0 < self.backtrack < 1:
            raise ConfigError("must lie in (0, 1)", "pgd.backtrack")
        if not 0 < self.armijo_c < 1:
            raise ConfigError("must lie in (0, 1)", "pgd.armijo_c")
        if not (self.stop_tol > 0 and self.initial_step > 0):
            raise ConfigError("must be > 0", "pgd.stop_tol")


@dataclass(frozen=True)
class FWConfig:
    stop_tol: float = 1e-6  # per unit bandwidth
    max_iters: int = 1000
    line_search_tol: float = 1e-6

    def __post_init__(self):
        if not (self.stop_tol > 0 and self.line_search_tol > 0 and self.max_iters > 0):
            raise ConfigError("tolerances and max_iters must be > 0", "fw")


class ExactRateObjective:
    """phi(p) = scale/ln2 * (sum_k p_k E ln S_k - c0), per unit bandwidth.

    ``c0`` is the truncated expectation of the squared-noise term that the
    shifted exponents leave out, so ``rate = -B/ln2 - B * phi``.
    """

    def __init__(self, c, q_sq, phys, quad: QuadratureSpec = QuadratureSpec(),
                 truncation_obj=8.0, truncation_grad=8.0):
        self.model = link_model(c, q_sq, phys)
        self.bandwidth = phys.bandwidth
        self.scale = 1.0 if self.model.complex_valued else 2.0
        self.exps = self.model.exponents()
        dim = self.model.dim
        self._obj_nodes = quad.nodes(dim, truncation_obj)
        self._grad_nodes = quad.nodes(dim, truncation_grad)
        self._c0_obj = self._c0(*self._obj_nodes)
        self._c0_grad = self._c0(*self._grad_nodes)

    @staticmethod
    def _c0(z, w):
        return 0.5 * float(w @ (z**2).sum(axis=1))

    def value(self, p) -> float:
        z, w = self._obj_nodes
        L, _, _ = kernels.mixture_logsum(*self.exps, z, w, p, grad=False)
        return self.scale / LN2 * (float(p @ L) - self._c0_obj)

    def grad(self, p):
        z, w = self._grad_nodes
        L, G, _ = kernels.mixture_logsum(*self.exps, z, w, p, grad=True)
        return self.scale / LN2 * (L + G - self._c0_grad)

    def rate(self, p) -> float:
        """Achievable rate in bits/s implied by the truncated objective."""
        return self.bandwidth * (-self.value(p) - 1.0 / LN2)


class LowerBoundObjective:
    """f(p) = scale * sum_k p_k log2 (A p)_k with A = exp(bound exponent), per unit bandwidth."""

    def __init__(self, c, q_sq, phys):
        model = link_model(c, q_sq, phys)
        self.bandwidth = phys.bandwidth
        self.scale = 1.0 if model.complex_valued else 2.0
        self.E = model.bound_exponent()

    def _log_ap(self, p):
        # Diagonal of E is 0 and the exponents are <= 0, so the row max is 0
        # over the support whenever p_k > 0; shift by the supported row max.
        on = p > 0
        e = self.E[:, on]
        top = e.max(axis=1)
        return top + np.log(np.exp(e - top[:, None]) @ p[on])

    def value(self, p) -> float:
        on = p > 0
        return self.scale / LN2 * float(p[on] @ self._log_ap(p)[on])

    def grad(self, p):
        la = self._log_ap(p)
        on = p > 0
        ratio = np.exp(self.E[on, :] - la[on][:, None])
        return self.scale / LN2 * (la + p[on] @ ratio)

    def rate(self, p) -> float:
        """Lower bound in bits/s."""
        return self.bandwidth * (GAP_CONST - self.value(p))


def grad_phi(p, c, q_sq, phys, cfg: PGDConfig = PGDConfig(), quad=QuadratureSpec()):
    """Gradient of the truncated exact-rate objective, in bits/s per unit probability."""
    obj = ExactRateObjective(c, q_sq, phys, quad, cfg.truncation_obj, cfg.truncation_grad)
    return obj.bandwidth * obj.grad(np.asarray(p, dtype=np.float64))


@dataclass
class OptimResult:
    probs: np.ndarray
    trace: list  # objective in bits/s, one entry per iterate (start included)
    steps: list = field(default_factory=list)
    dp: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "step", "dp_norm"])
        for i, obj in enumerate(self.trace):
            step = self.steps[i - 1] if i > 0 else 0.0
            dp = self.dp[i - 1] if i > 0 else 0.0
            w.writerow([i, repr(float(obj)), repr(float(step)), repr(float(dp))])
        return buf.getvalue()


def _start(c, fset, p0):
    if p0 is None:
        p0 = np.full(c.size, 1.0 / c.size)
    return project_feasible(np.asarray(p0, dtype=np.float64), fset)


def pgd_run(obj, fset: FeasibleSet, p0, cfg: PGDConfig = PGDConfig()) -> OptimResult:
    p = project_feasible(np.asarray(p0, dtype=np.float64), fset)
    B = obj.bandwidth
    f = obj.value(p)
    res = OptimResult(p, [B * f])
    if p.size == 1:
        res.converged = True
        return res
    for it in range(cfg.max_iters):
        g = obj.grad(p)
        step = cfg.initial_step
        accepted = None
        for _ in range(cfg.max_backtracks):
            cand = project_feasible(p - step * g, fset)
            f_c = obj.value(cand)
            if f_c <= f + cfg.armijo_c * float(g @ (cand - p)):
                accepted = cand
                break
            step *= cfg.backtrack
        res.iterations = it + 1
        if accepted is None:
            # No descent along the arc at machine resolution: stationary.
            res.converged = True
            break
        dp = float(np.linalg.norm(accepted - p))
        p, f = accepted, f_c
        res.trace.append(B * f)
        res.steps.append(step)
        res.dp.append(dp)
        if dp <= cfg.stop_tol:
            res.converged = True
            break
    res.probs = p
    return res


def pgd_optimize(c, q_sq, phys, fset: FeasibleSet = None, cfg: PGDConfig = PGDConfig(),
                 quad=QuadratureSpec(), p0=None) -> OptimResult:
    fset = c.feasible_set() if fset is None else fset
    obj = ExactRateObjective(c, q_sq, phys, quad, cfg.truncation_obj, cfg.truncation_grad)
    return pgd_run(obj, fset, _start(c, fset, p0), cfg)


def fw_lp_step(grad, fset: FeasibleSet):
    return lp_vertex(grad, fset)


def fw_run(obj, fset: FeasibleSet, p0, cfg: FWConfig = FWConfig()) -> OptimResult:
    p = project_feasible(np.asarray(p0, dtype=np.float64), fset)
    B = obj.bandwidth
    f = obj.value(p)
    res = OptimResult(p, [B * f])
    if p.size == 1:
        res.converged = True
        return res
    for it in range(cfg.max_iters):
        g = obj.grad(p)
        d = fw_lp_step(g, fset) - p
        gap = float(g @ d)
        res.gaps.append(gap)
        res.iterations = it
        if abs(gap) <= cfg.stop_tol:
            res.converged = True
            break
        lam = _fw_line_search(obj, p, d, cfg.line_search_tol)
        cand = np.clip(p + lam * d, 0.0, None)
        f_c = obj.value(cand)
        halvings = 0
        while f_c > f and halvings < 60:
            lam *= 0.5
            cand = np.clip(p + lam * d, 0.0, None)
            f_c = obj.value(cand)
            halvings += 1
        if f_c > f:
            res.converged = True
            break
        res.steps.append(lam)
        res.dp.append(lam * float(np.linalg.norm(d)))
        p, f = cand, f_c
        res.trace.append(B * f)
    else:
        res.iterations = cfg.max_iters
    res.probs = p
    return res


def _fw_line_search(obj, p, d, tol):
    """Root of h(lam) = grad f(p + lam d) . d on [0, 1]; h(0) < 0 by construction."""
    def h(lam):
        return float(obj.grad(np.clip(p + lam * d, 0.0, None)) @ d)

    if h(1.0) <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    return max(lo, tol) if lo > 0 else 0.5 * hi


def fw_optimize(c, q_sq, phys, fset: FeasibleSet = None, cfg: FWConfig = FWConfig(),
                p0=None) -> OptimResult:
    fset = c.feasible_set() if fset is None else fset
    obj = LowerBoundObjective(c, q_sq, phys)
    return fw_run(obj, fset, _start(c, fset, p0), cfg)


__all__ = ["PGDConfig", "FWConfig", "ExactRateObjective", "LowerBoundObjective", "grad_phi",
           "pgd_optimize", "pgd_run", "fw_lp_step", "fw_optimize", "fw_run", "OptimResult"]
