"""Power split between the optical and RF links.

``wf_allocate`` solves the stationarity conditions with the MMSE replaced
by its linear surrogate, so each squared amplification has a closed form
in the budget multiplier ``gamma``; ``gamma`` is then bisected.
``lb_allocate`` minimises the convex closed-form lower-bound objective
along the (tight) budget line.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from .constellation import moments
from .errors import BracketError, ConfigError
from .rate import GAP_CONST, LN2, LinkPhysics, lmmse

SCAN_POINTS = 64


@dataclass(frozen=True)
class PowerBudget:
    total_elec: float
    max_avg_optical: float = math.inf
    max_inst_optical: float = math.inf

    def __post_init__(self):
        if not self.total_elec >= 0:
            raise ConfigError("must be >= 0", "budget.total_elec")
        if not self.max_avg_optical > 0:
            raise ConfigError("must be > 0", "budget.max_avg_optical")
        if not self.max_inst_optical > 0:
            raise ConfigError("must be > 0", "budget.max_inst_optical")

    def tau(self, c1) -> float:
        """Cap on the optical amplitude scaling from the average and peak optical limits.

        Uses the constellation's mean cap when it has one, otherwise its
        current mean.
        """
        mean_ref = c1.mean_cap if math.isfinite(c1.mean_cap) else moments(c1)[0]
        avg = self.max_avg_optical / mean_ref if mean_ref > 0 else math.inf
        return min(avg, self.max_inst_optical / c1.peak)

    def tau_sq(self, c1) -> float:
        t = self.tau(c1)
        return t * t


@dataclass
class PowerAllocation:
    q1_sq: float
    q2_sq: float
    gamma: float = 0.0
    nu: float = 0.0
    meta: dict = field(default_factory=dict)

    def spend(self, coef1, coef2) -> float:
        return coef1 * self.q1_sq + coef2 * self.q2_sq


def budget_coefficients(c1, c2, phys1, phys2, budget_uses_caps=False):
    """Electrical cost per unit squared amplification on each link."""
    if budget_uses_caps:
        e1, e2 = c1.elec_cap, c2.elec_cap
        if not (math.isfinite(e1) and math.isfinite(e2)):
            raise ConfigError("budget_uses_caps needs finite elec_cap on both links",
                              "budget_uses_caps")
    else:
        e1, e2 = moments(c1)[1], moments(c2)[1]
    return phys1.amp_efficiency * e1, phys2.amp_efficiency * e2


def _spread(c) -> bool:
    """True when the support has at least two distinct points."""
    pts = c.points[c.probs > 0]
    return pts.size > 1 and np.ptp(pts.real) + (np.ptp(pts.imag) if np.iscomplexobj(pts) else 0) > 0


class _SurrogateLink:
    """Closed-form allocation of one link at a given multiplier."""

    def __init__(self, c, phys: LinkPhysics, coef: float, factor: float):
        eps = moments(c)[1]
        self.eps = eps
        self.snr_unit = phys.gain_sq / phys.noise_power
        self.coef = coef
        self.factor = factor  # 2 for the optical link, 1 for RF
        self.active = eps > 0 and self.snr_unit > 0 and coef > 0 and _spread(c)

    @property
    def floor(self) -> float:
        return 1.0 / (self.snr_unit * self.eps * self.eps)

    def zero_power_gamma(self) -> float:
        return self.snr_unit * self.eps * self.eps / (self.factor * self.coef)

    def q_sq(self, price: float) -> float:
        if not self.active:
            return 0.0
        if price <= 0:
            return math.inf
        return max(1.0 / (self.factor * price) - self.floor, 0.0)

    def marginal(self, q_sq: float) -> float:
        """Surrogate marginal rate per unit squared amplification."""
        a = self.snr_unit * self.eps
        return a / self.factor * lmmse(self.eps, a * q_sq)


def wf_allocate(c1, c2, phys1, phys2, budget: PowerBudget, tol=1e-8,
                budget_uses_caps=False) -> PowerAllocation:
    if not tol > 0:
        raise ConfigError("must be > 0", "tol")
    k1, k2 = budget_coefficients(c1, c2, phys1, phys2, budget_uses_caps)
    opt = _SurrogateLink(c1, phys1, k1, 2.0)
    rf = _SurrogateLink(c2, phys2, k2, 1.0)
    tau_sq = budget.tau_sq(c1)
    P = budget.total_elec

    def optical(gamma):
        q = opt.q_sq(gamma * k1)
        if q > tau_sq:
            nu = 1.0 / (2.0 * (tau_sq + opt.floor)) - gamma * k1
            return tau_sq, max(nu, 0.0)
        return q, 0.0

    def spend(gamma):
        return k1 * optical(gamma)[0] + k2 * rf.q_sq(gamma * k2)

    meta = {"clamped": [name for name, link in (("lifi", opt), ("wifi", rf)) if not link.active]}
    if not (opt.active or rf.active) or P == 0:
        return PowerAllocation(0.0, 0.0, meta=meta)
    if not rf.active and (tau_sq == 0 or k1 * tau_sq <= P):
        q1, nu = optical(0.0)
        return PowerAllocation(q1, 0.0, 0.0, nu, meta)

    hi = max(link.zero_power_gamma() for link in (opt, rf) if link.active)
    for _ in range(200):
        if spend(hi) <= P:
            break
        hi *= 2.0
    else:
        raise BracketError("budget multiplier bracket not found")
    lo = 0.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if spend(mid) <= P:
            hi = mid
        else:
            lo = mid
    q1, nu = optical(hi)
    return PowerAllocation(q1, rf.q_sq(hi * k2), hi, nu, meta)


def wf_kkt_residuals(alloc: PowerAllocation, c1, c2, phys1, phys2, budget,
                     budget_uses_caps=False) -> dict:
    """Stationarity and complementary-slackness residuals of the surrogate problem."""
    k1, k2 = budget_coefficients(c1, c2, phys1, phys2, budget_uses_caps)
    opt = _SurrogateLink(c1, phys1, k1, 2.0)
    rf = _SurrogateLink(c2, phys2, k2, 1.0)
    out = {}
    # A link at zero power only needs its marginal below the price.
    for name, link, q, price in (("lifi", opt, alloc.q1_sq, alloc.gamma * k1 + alloc.nu),
                                 ("wifi", rf, alloc.q2_sq, alloc.gamma * k2)):
        if not link.active:
            out[f"stationarity_{name}"] = 0.0
            continue
        r = link.marginal(q) - price
        out[f"stationarity_{name}"] = r if q > 0 else max(r, 0.0)
    slack = budget.total_elec - alloc.spend(k1, k2)
    out["budget_slack"] = slack
    out["gamma_slack"] = alloc.gamma * slack
    out["nu_slack"] = alloc.nu * (alloc.q1_sq - budget.tau_sq(c1)) if alloc.nu > 0 else 0.0
    return out


class LowerBoundObjective1D:
    """Closed-form lower-bound objective along the tight budget line.

    ``phi(q1) = 2 B1 p1' u(q1) + B2 p2' v(q2(q1))`` with
    ``q2 = (P_T - k1 q1) / k2``; the lower bound itself is
    ``(1 - 1/ln2)(B1 + B2) - phi``.
    """

    def __init__(self, c1, c2, phys1, phys2, budget: PowerBudget, budget_uses_caps=False):
        self.k1, self.k2 = budget_coefficients(c1, c2, phys1, phys2, budget_uses_caps)
        self.P = budget.total_elec
        self.tau_sq = budget.tau_sq(c1)
        self.B1, self.B2 = phys1.bandwidth, phys2.bandwidth
        self.p1, self.p2 = c1.probs, c2.probs
        d1 = c1.points[:, None] - c1.points[None, :]
        d2 = c2.points[:, None] - c2.points[None, :]
        # Exponent slopes: optical pair exponent is -C q1, RF is -D q2.
        self.C = phys1.gain_sq * d1**2 / (4.0 * phys1.noise_power)
        self.D = phys2.gain_sq * np.abs(d2) ** 2 / (2.0 * phys2.noise_power)

    @property
    def q1_max(self) -> float:
        if self.k1 <= 0:
            return 0.0
        return min(self.tau_sq, self.P / self.k1)

    def q2_of(self, q1) -> float:
        if self.k2 <= 0:
            return 0.0
        return max((self.P - self.k1 * q1) / self.k2, 0.0)

    @staticmethod
    def _mix(slope, q, p):
        on = p > 0
        e = -slope[np.ix_(on, on)] * q
        inner = logsumexp(e, b=p[on][None, :], axis=1)
        w = np.exp(e - inner[:, None]) * p[on][None, :]
        slope_weighted = (w * slope[np.ix_(on, on)]).sum(axis=1)
        return float(p[on] @ inner) / LN2, slope_weighted, on

    def __call__(self, q1) -> float:
        u, _, _ = self._mix(self.C, q1, self.p1)
        v, _, _ = self._mix(self.D, self.q2_of(q1), self.p2)
        return 2 * self.B1 * u + self.B2 * v

    def residual(self, q1) -> float:
        """2 B1 p1' a(q1) - B2 p2' b(q1); equals -ln2 * dphi/dq1, so decreasing in q1."""
        _, a, on1 = self._mix(self.C, q1, self.p1)
        term1 = 2 * self.B1 * float(self.p1[on1] @ a)
        if self.k2 <= 0:
            return term1
        _, b, on2 = self._mix(self.D, self.q2_of(q1), self.p2)
        return term1 - self.B2 * (self.k1 / self.k2) * float(self.p2[on2] @ b)

    def lower_bound(self, q1) -> float:
        return GAP_CONST * (self.B1 + self.B2) - self(q1)


def lb_phi(q1_sq, c1, c2, phys1, phys2, budget, budget_uses_caps=False) -> float:
    return LowerBoundObjective1D(c1, c2, phys1, phys2, budget, budget_uses_caps)(q1_sq)


def lb_stationary_residual(q1_sq, c1, c2, phys1, phys2, budget, budget_uses_caps=False) -> float:
    return LowerBoundObjective1D(c1, c2, phys1, phys2, budget, budget_uses_caps).residual(q1_sq)


def lb_allocate(c1, c2, phys1, phys2, budget: PowerBudget, tol=1e-8, budget_uses_caps=False):
    """Returns (allocation, lower-bound value in bits/s)."""
    obj = LowerBoundObjective1D(c1, c2, phys1, phys2, budget, budget_uses_caps)
    hi = obj.q1_max
    candidates = [0.0, hi]
    root = None
    if hi > 0:
        grid = np.linspace(0.0, hi, SCAN_POINTS + 1)
        res = np.array([obj.residual(q) for q in grid])
        cross = np.nonzero((res[:-1] > 0) & (res[1:] <= 0))[0]
        if cross.size:
            i = int(cross[0])
            if res[i + 1] == 0:
                root = float(grid[i + 1])
            else:
                root = bisect(obj.residual, grid[i], grid[i + 1],
                              xtol=tol * max(hi, 1e-300), rtol=4 * np.finfo(float).eps,
                              maxiter=500)
            if 0 < root < hi:
                candidates.append(root)
    values = [obj(q) for q in candidates]
    best = int(np.argmin(values))
    q1 = candidates[best]
    tau_binds = obj.k1 > 0 and obj.k1 * obj.tau_sq <= obj.P
    alloc = PowerAllocation(q1, obj.q2_of(q1),
                            meta={"case": "tau" if tau_binds else "budget",
                                  "stationary_root": root,
                                  "candidate": ("zero", "max", "stationary")[best]})
    return alloc, obj.lower_bound(q1)
