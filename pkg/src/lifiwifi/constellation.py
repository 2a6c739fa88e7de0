"""Constrained discrete input sets and their feasible probability polytopes.

Point positions are fixed; only probabilities are optimised.  The optical
set caps the peak, the mean (optical power) and the second moment
(electrical power); the RF set caps the second moment only.
"""
from dataclasses import dataclass, field, replace
from itertools import combinations
import math

import numpy as np

from . import kernels
from .errors import ConfigError, InfeasibleError

PROB_TOL = 1e-9
# Relative slack on moment caps when validating a constellation.
CAP_TOL = 1e-9


def _cap_ok(value, cap):
    return value <= cap + CAP_TOL * max(1.0, abs(cap))


def _as_probs(probs, n, what):
    p = np.asarray(probs, dtype=np.float64).copy()
    if p.shape != (n,):
        raise ConfigError(f"expected {n} probabilities, got shape {p.shape}", what)
    if np.any(~np.isfinite(p)) or np.any(p < -PROB_TOL):
        raise ConfigError("probabilities must be finite and >= 0", what)
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ConfigError(f"probabilities sum to {p.sum():.12g}, not 1", what)
    return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class OpticalConstellation:
    points: np.ndarray
    probs: np.ndarray
    peak: float
    mean_cap: float = math.inf
    elec_cap: float = math.inf

    def __post_init__(self):
        x = np.asarray(self.points, dtype=np.float64).ravel()
        if x.size < 1 or np.any(~np.isfinite(x)):
            raise ConfigError("need at least one finite point", "points")
        if not self.peak > 0:
            raise ConfigError("must be > 0", "peak")
        if np.any(x < 0) or np.any(x > self.peak * (1 + 1e-12)):
            raise ConfigError("points must lie in [0, peak]", "points")
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "probs", _as_probs(self.probs, x.size, "probs"))
        mean, power = moments(self)
        if not _cap_ok(mean, self.mean_cap):
            raise InfeasibleError(f"mean {mean:.6g} exceeds mean_cap {self.mean_cap:.6g}")
        if not _cap_ok(power, self.elec_cap):
            raise InfeasibleError(f"power {power:.6g} exceeds elec_cap {self.elec_cap:.6g}")

    @property
    def size(self) -> int:
        return self.points.size

    def with_probs(self, probs):
        return replace(self, probs=np.asarray(probs, dtype=np.float64))

    def feasible_set(self) -> "FeasibleSet":
        rows, bounds = [], []
        if math.isfinite(self.mean_cap):
            rows.append(self.points)
            bounds.append(self.mean_cap)
        if math.isfinite(self.elec_cap):
            rows.append(self.points**2)
            bounds.append(self.elec_cap)
        return FeasibleSet("optical", self.size, np.array(rows).reshape(len(rows), self.size),
                           np.array(bounds, dtype=np.float64))

    def to_dict(self):
        return {"kind": "optical",
                "points": [[float(x), float(p)] for x, p in zip(self.points, self.probs)],
                "peak": self.peak, "mean_cap": _num_out(self.mean_cap),
                "elec_cap": _num_out(self.elec_cap)}


@dataclass(frozen=True, eq=False)
class RFConstellation:
    points: np.ndarray
    probs: np.ndarray
    elec_cap: float = math.inf

    def __post_init__(self):
        x = np.asarray(self.points, dtype=np.complex128).ravel()
        if x.size < 1 or np.any(~np.isfinite(x)):
            raise ConfigError("need at least one finite point", "points")
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "probs", _as_probs(self.probs, x.size, "probs"))
        _, power = moments(self)
        if not _cap_ok(power, self.elec_cap):
            raise InfeasibleError(f"power {power:.6g} exceeds elec_cap {self.elec_cap:.6g}")

    @property
    def size(self) -> int:
        return self.points.size

    def with_probs(self, probs):
        return replace(self, probs=np.asarray(probs, dtype=np.float64))

    def feasible_set(self) -> "FeasibleSet":
        if math.isfinite(self.elec_cap):
            return FeasibleSet("rf", self.size, np.abs(self.points)[None, :] ** 2,
                               np.array([self.elec_cap]))
        return FeasibleSet("rf", self.size, np.zeros((0, self.size)), np.zeros(0))

    def to_dict(self):
        return {"kind": "rf",
                "points": [[[float(x.real), float(x.imag)], float(p)]
                           for x, p in zip(self.points, self.probs)],
                "elec_cap": _num_out(self.elec_cap)}


def _num_out(v):
    return None if math.isinf(v) else float(v)


def _num_in(v):
    return math.inf if v is None else float(v)


def constellation_from_dict(d):
    """Inverse of ``to_dict`` for either constellation kind."""
    kind = d.get("kind")
    pairs = d.get("points")
    if not pairs:
        raise ConfigError("missing point list", "points")
    probs = [pp[1] for pp in pairs]
    if kind == "optical":
        return OpticalConstellation([pp[0] for pp in pairs], probs, float(d["peak"]),
                                    _num_in(d.get("mean_cap")), _num_in(d.get("elec_cap")))
    if kind == "rf":
        pts = [complex(pp[0][0], pp[0][1]) for pp in pairs]
        return RFConstellation(pts, probs, _num_in(d.get("elec_cap")))
    raise ConfigError(f"unknown constellation kind {kind!r}", "kind")


def moments(c):
    """(mean, electrical power) under the current probabilities; mean is 0 for RF."""
    if isinstance(c, RFConstellation):
        return 0.0, float(c.probs @ np.abs(c.points) ** 2)
    return float(c.probs @ c.points), float(c.probs @ c.points**2)


def make_pam(M: int, peak: float, mean_cap=math.inf, elec_cap=math.inf) -> OpticalConstellation:
    """Equispaced nonnegative M-level grid on [0, peak], equiprobable."""
    if M < 1:
        raise ConfigError("must be >= 1", "M")
    if not peak > 0:
        raise ConfigError("must be > 0", "peak")
    pts = np.zeros(1) if M == 1 else np.linspace(0.0, peak, M)
    return OpticalConstellation(pts, np.full(M, 1.0 / M), peak, mean_cap, elec_cap)


def make_qam(N: int, elec_cap: float = 1.0) -> RFConstellation:
    """Square N-QAM, equiprobable, scaled so the average power equals elec_cap."""
    side = math.isqrt(N) if N >= 1 else 0
    if N < 1 or side * side != N:
        raise ConfigError(f"N={N} is not a perfect square", "N")
    if N == 1:
        return RFConstellation(np.zeros(1), np.ones(1), elec_cap)
    axis = np.arange(side) * 2.0 - (side - 1)
    grid = (axis[None, :] + 1j * axis[:, None]).ravel()
    grid *= math.sqrt(elec_cap / np.mean(np.abs(grid) ** 2))
    return RFConstellation(grid, np.full(N, 1.0 / N), elec_cap)


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Probability simplex intersected with ``caps @ p <= bounds`` (at most two rows)."""

    kind: str
    dim: int
    caps: np.ndarray
    bounds: np.ndarray
    _vertices: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        caps = np.asarray(self.caps, dtype=np.float64).reshape(-1, self.dim)
        if caps.shape[0] > 2:
            raise ConfigError("at most two linear caps supported", "caps")
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=np.float64).ravel())
        if self.bounds.size != caps.shape[0]:
            raise ConfigError("one bound per cap row", "bounds")

    def with_bounds(self, bounds):
        return FeasibleSet(self.kind, self.dim, self.caps, bounds)

    def contains(self, p, tol=1e-8) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(p.shape == (self.dim,) and np.all(p >= -tol)
                    and abs(p.sum() - 1.0) <= tol
                    and np.all(self.caps @ p <= self.bounds + tol * np.maximum(1.0, np.abs(self.bounds))))

    def vertices(self) -> np.ndarray:
        """All extreme points, in a fixed order (by support size, then index)."""
        if not self._vertices:
            self._vertices.append(_enumerate_vertices(self.caps, self.bounds, self.dim))
        return self._vertices[0]

    @property
    def empty(self) -> bool:
        return self.vertices().shape[0] == 0


def _enumerate_vertices(caps, bounds, n, tol=1e-12):
    # A vertex has at most (1 + number of tight caps) nonzero entries.
    def feasible(v):
        return (np.all(v >= -tol) and np.all(caps @ v <= bounds + tol * np.maximum(1.0, np.abs(bounds))))

    out = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        if feasible(v):
            out.append(v)
    ncap = caps.shape[0]
    for i, k in combinations(range(n), 2):
        for j in range(ncap):
            ai, ak = caps[j, i], caps[j, k]
            if ai == ak:
                continue
            t = (bounds[j] - ak) / (ai - ak)
            if tol < t < 1 - tol:
                v = np.zeros(n)
                v[i], v[k] = t, 1 - t
                if feasible(v):
                    out.append(np.clip(v, 0.0, None))
    if ncap == 2:
        for idx in combinations(range(n), 3):
            sub = np.vstack([np.ones(3), caps[:, idx]])
            if abs(np.linalg.det(sub)) < 1e-14:
                continue
            w = np.linalg.solve(sub, np.r_[1.0, bounds])
            if np.all(w > tol):
                v = np.zeros(n)
                v[list(idx)] = w
                if feasible(v):
                    out.append(v)
    return np.array(out).reshape(len(out), n)


def lp_vertex(grad, fset: FeasibleSet) -> np.ndarray:
    """Minimise ``grad @ p`` over the set; ties go to the earliest-enumerated vertex."""
    grad = np.asarray(grad, dtype=np.float64)
    if np.any(~np.isfinite(grad)):
        raise ConfigError("gradient must be finite", "grad")
    V = fset.vertices()
    if V.shape[0] == 0:
        raise InfeasibleError("feasible set is empty")
    vals = V @ grad
    best = vals.min()
    slack = 1e-12 * max(1.0, np.abs(grad).max())
    return V[int(np.argmax(vals <= best + slack))].copy()


def project_feasible(p, fset: FeasibleSet) -> np.ndarray:
    """Euclidean projection onto the feasible polytope."""
    x = np.asarray(p, dtype=np.float64)
    if x.shape != (fset.dim,):
        raise ConfigError(f"expected length {fset.dim}, got {x.shape}", "p")
    if fset.empty:
        raise InfeasibleError("feasible set is empty")
    if fset.contains(x, tol=1e-14):
        return x.copy()
    q, lam = kernels.capped_simplex_project(x, fset.caps, fset.bounds)
    polished = _kkt_polish(x, q, lam, fset)
    return polished if polished is not None else q


def _kkt_polish(x, q, lam, fset, tol=1e-12):
    """Re-solve the equality-constrained QP on the detected support and active caps.

    Returns None if the refined point fails the KKT checks, so the caller
    keeps the bisection result.
    """
    support = q > 1e-13
    active = [j for j in range(fset.caps.shape[0]) if lam[j] > 0]
    Aj = fset.caps[active][:, support]
    ns = int(support.sum())
    # Unknowns: theta (sum multiplier) and lambda_j; q_S = x_S - theta - Aj^T lambda.
    E = np.vstack([np.ones(ns), Aj])
    rhs = E @ x[support] - np.r_[1.0, fset.bounds[active]]
    H = E @ E.T
    try:
        mult = np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError:
        return None
    theta, lam_a = mult[0], mult[1:]
    if np.any(lam_a < -tol):
        return None
    r = x - theta - fset.caps[active].T @ lam_a
    out = np.zeros_like(x)
    out[support] = r[support]
    if np.any(out[support] < -tol) or np.any(r[~support] > 1e-10):
        return None
    out = np.clip(out, 0.0, None)
    if not fset.contains(out, tol=1e-12):
        return None
    return out
