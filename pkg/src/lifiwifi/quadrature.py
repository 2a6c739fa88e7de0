"""Node/weight tables for expectations over standard normal noise.

All rules return nodes ``z`` of shape (T, dim) and weights ``w`` of shape
(T,) such that ``sum(w * f(z))`` approximates ``E f(Z)`` for Z ~ N(0, I)
restricted to the box ``|z_i| <= truncation``.
"""
from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ConfigError

METHODS = ("gauss-hermite", "truncated-grid", "monte-carlo")
_ALIASES = {"gh": "gauss-hermite", "grid": "truncated-grid", "mc": "monte-carlo"}
MIN_ORDER = 8


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "gauss-hermite"
    order: int = 48
    truncation: float = 8.0
    seed: int = 0

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}", "quadrature.method")
        object.__setattr__(self, "method", method)
        if int(self.order) < 1:
            raise ConfigError("must be >= 1", "quadrature.order")
        object.__setattr__(self, "order", int(self.order))
        if not self.truncation >= 4:
            raise ConfigError("must be >= 4 (noise std multiples)", "quadrature.truncation")

    @property
    def stochastic(self) -> bool:
        return self.method == "monte-carlo"

    def warnings(self):
        if self.method != "monte-carlo" and self.order < MIN_ORDER:
            return [f"quadrature order {self.order} < {MIN_ORDER}; results may be inaccurate"]
        return []

    def nodes(self, dim: int, truncation=None):
        tr = self.truncation if truncation is None else float(truncation)
        return _nodes(self.method, self.order, tr, self.seed, int(dim))


@lru_cache(maxsize=64)
def _nodes(method, order, truncation, seed, dim):
    if method == "monte-carlo":
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((order, dim))
        w = np.full(order, 1.0 / order)
    else:
        z1, w1 = _rule_1d(method, order, truncation)
        z = np.array(list(itertools.product(z1, repeat=dim)))
        w = np.prod(np.array(list(itertools.product(w1, repeat=dim))), axis=1)
    keep = np.all(np.abs(z) <= truncation, axis=1)
    if method == "monte-carlo":
        w = np.where(keep, w, 0.0)
    else:
        z, w = z[keep], w[keep]
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def _rule_1d(method, order, truncation):
    if method == "gauss-hermite":
        x, w = hermgauss(order)
        return np.sqrt(2.0) * x, w / w.sum()
    # Composite Simpson on [-truncation, truncation] against the normal density.
    n = order if order % 2 == 1 else order + 1
    n = max(n, 3)
    z = np.linspace(-truncation, truncation, n)
    h = z[1] - z[0]
    simpson = np.ones(n)
    simpson[1:-1:2] = 4.0
    simpson[2:-1:2] = 2.0
    w = simpson * h / 3.0 * np.exp(-0.5 * z**2) / np.sqrt(2 * np.pi)
    return z, w
