"""Exact achievable rates, closed-form bounds, and the MMSE machinery.

Rates are bits/s.  For a link with displacement matrix
``delta[k, m] = sqrt(|g|^2 q / (B sigma^2)) * (x_k - x_m)`` the mutual
information in nats per channel use is

    real:    -sum_k p_k E_t log sum_m p_m exp(-delta^2/2 - delta t)
    complex: -sum_k p_k E_t log sum_m p_m exp(-|delta|^2 - sqrt2 Re(delta conj t))

and the optical rate is ``2 B I / ln 2`` while the RF rate is ``B I / ln 2``.
"""
from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .constellation import OpticalConstellation, RFConstellation, moments
from .errors import ConfigError, DomainError
from .quadrature import QuadratureSpec

LN2 = math.log(2.0)
# One minus 1/ln2: the per-Hz offset of every lower bound.
GAP_CONST = 1.0 - 1.0 / LN2
CSV_COLUMNS = ("snr1", "snr2", "rate_lifi", "rate_wifi", "rate_total", "lower", "upper")


@dataclass(frozen=True)
class LinkPhysics:
    gain: complex
    bandwidth: float
    noise_psd: float
    amp_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("bandwidth", "noise_psd", "amp_efficiency"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", name)
        if not np.isfinite(self.gain):
            raise ConfigError("must be finite", "gain")

    @property
    def gain_sq(self) -> float:
        return float(abs(self.gain) ** 2)

    @property
    def noise_power(self) -> float:
        return self.bandwidth * self.noise_psd

    def snr_per_unit_power(self) -> float:
        """SNR delivered per unit of squared amplification and unit symbol energy."""
        return self.gain_sq / self.noise_power


@dataclass(frozen=True)
class LinkModel:
    """A link reduced to what the rate integrals need."""

    complex_valued: bool
    points: np.ndarray
    bandwidth: float
    scale: float

    @property
    def dim(self) -> int:
        return 2 if self.complex_valued else 1

    @property
    def prefactor(self) -> float:
        """Bits/s per nat of per-use information (two real dims per Hz for the optical link)."""
        return (1.0 if self.complex_valued else 2.0) * self.bandwidth / LN2

    @property
    def max_rate(self) -> float:
        return self.prefactor * LN2 * math.log2(self.points.size)

    def delta(self):
        x = self.points
        return self.scale * (x[:, None] - x[None, :])

    def exponents(self):
        d = self.delta()
        if self.complex_valued:
            c = -np.abs(d) ** 2
            b = -math.sqrt(2.0) * np.stack([d.real, d.imag], axis=-1)
        else:
            c = -0.5 * d**2
            b = -d[:, :, None]
        return np.ascontiguousarray(c), np.ascontiguousarray(b)

    def bound_exponent(self):
        """Per-pair exponent of the Jensen lower bound; the upper bound uses twice it."""
        d = self.delta()
        return -0.5 * np.abs(d) ** 2 if self.complex_valued else -0.25 * d**2


def link_model(c, q_sq: float, phys: LinkPhysics) -> LinkModel:
    if q_sq < 0:
        raise DomainError("squared amplification must be >= 0")
    scale = math.sqrt(phys.gain_sq * q_sq / phys.noise_power)
    is_rf = isinstance(c, RFConstellation)
    pts = c.points if is_rf else c.points.astype(np.float64)
    return LinkModel(is_rf, pts, phys.bandwidth, scale)


def snr(c, q_sq: float, phys: LinkPhysics) -> float:
    return phys.gain_sq * q_sq * moments(c)[1] / phys.noise_power


@dataclass
class LinkRate:
    rate: float
    std: float = 0.0
    warnings: list = field(default_factory=list)


def _expected_info(model: LinkModel, p, quad: QuadratureSpec):
    """Returns (nats per use, standard error of the estimate)."""
    if model.scale == 0.0 or np.count_nonzero(p) <= 1:
        return 0.0, 0.0
    z, w = quad.nodes(model.dim)
    c, b = model.exponents()
    L, _, F = kernels.mixture_logsum(c, b, z, w, p, grad=False)
    info = -float(p @ L)
    std = 0.0
    if quad.stochastic:
        n = w.size
        std = float(np.std(F * (w > 0), ddof=1) / math.sqrt(n))
    return info, std


def link_rate(c, q_sq, phys, quad=QuadratureSpec()) -> LinkRate:
    model = link_model(c, q_sq, phys)
    info, std = _expected_info(model, c.probs, quad)
    rate = min(max(model.prefactor * info, 0.0), model.max_rate)
    return LinkRate(rate, model.prefactor * std, quad.warnings())


def rate_lifi(c: OpticalConstellation, q1_sq, phys, quad=QuadratureSpec()) -> float:
    return link_rate(c, q1_sq, phys, quad).rate


def rate_wifi(c: RFConstellation, q2_sq, phys, quad=QuadratureSpec()) -> float:
    return link_rate(c, q2_sq, phys, quad).rate


def _log2_mix(expo, p):
    """sum_k p_k log2 sum_m p_m exp(expo[k, m]), skipping zero-probability rows/columns."""
    on = p > 0
    inner = logsumexp(expo[np.ix_(on, on)], b=p[on][None, :], axis=1)
    return float(p[on] @ inner) / LN2


def link_bounds(c, q_sq, phys) -> tuple:
    """(lower, upper) closed-form bounds in bits/s."""
    model = link_model(c, q_sq, phys)
    e = model.bound_exponent()
    p = c.probs
    factor = model.prefactor * LN2
    upper = -factor * _log2_mix(2.0 * e, p)
    lower = model.bandwidth * GAP_CONST - factor * _log2_mix(e, p)
    return lower, max(upper, 0.0)


def bounds_lifi(c: OpticalConstellation, q1_sq, phys):
    return link_bounds(c, q1_sq, phys)


def bounds_wifi(c: RFConstellation, q2_sq, phys):
    return link_bounds(c, q2_sq, phys)


def bounds_aggregate(c1, q1_sq, phys1, c2, q2_sq, phys2):
    l1, u1 = bounds_lifi(c1, q1_sq, phys1)
    l2, u2 = bounds_wifi(c2, q2_sq, phys2)
    return l1 + l2, u1 + u2


@dataclass
class RateReport:
    rate_lifi: float
    rate_wifi: float
    rate_total: float
    lower_total: float
    upper_total: float
    snr1: float
    snr2: float
    std_total: float = 0.0
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def csv_row(self):
        return (self.snr1, self.snr2, self.rate_lifi, self.rate_wifi,
                self.rate_total, self.lower_total, self.upper_total)


def rate_aggregate(c1, q1_sq, phys1, c2, q2_sq, phys2, quad=QuadratureSpec()) -> RateReport:
    r1 = link_rate(c1, q1_sq, phys1, quad)
    r2 = link_rate(c2, q2_sq, phys2, quad)
    lower, upper = bounds_aggregate(c1, q1_sq, phys1, c2, q2_sq, phys2)
    return RateReport(r1.rate, r2.rate, r1.rate + r2.rate, lower, upper,
                      snr(c1, q1_sq, phys1), snr(c2, q2_sq, phys2),
                      math.hypot(r1.std, r2.std), sorted(set(r1.warnings + r2.warnings)))


# Unit-power channel Y = sqrt(snr) X + N, X normalised to unit second moment.

def _unit_model(c, snr_value):
    if snr_value < 0:
        raise DomainError("snr must be >= 0")
    _, power = moments(c)
    is_rf = isinstance(c, RFConstellation)
    pts = c.points / math.sqrt(power) if power > 0 else np.zeros_like(c.points)
    return LinkModel(is_rf, pts, 1.0, math.sqrt(snr_value))


def mutual_information(c, snr_value, quad=QuadratureSpec()) -> float:
    """I(X; sqrt(snr) X + N) in nats per channel use, X at unit power."""
    info, _ = _expected_info(_unit_model(c, snr_value), c.probs, quad)
    return info


def mmse(c, snr_value, quad=QuadratureSpec(order=64)) -> float:
    """E|X - E[X|Y]|^2 for the unit-power channel (real or circular complex noise)."""
    model = _unit_model(c, snr_value)
    x, p = model.points, c.probs
    mean = p @ x
    var = float(p @ np.abs(x - mean) ** 2)
    if model.scale == 0.0 or np.count_nonzero(p) <= 1:
        return var
    z, w = quad.nodes(model.dim)
    cexp, bexp = model.exponents()
    on = p > 0
    logp = np.where(on, np.log(np.where(on, p, 1.0)), -np.inf)
    err = 0.0
    for k in np.nonzero(on)[0]:
        e = cexp[k][None, :] + z @ bexp[k].T + logp[None, :]
        post = np.exp(e - logsumexp(e, axis=1, keepdims=True))
        est = post @ x
        err += p[k] * float(w @ np.abs(x[k] - est) ** 2)
    return min(max(err, 0.0), var)


def lmmse(t: float, x: float) -> float:
    """Linear-MMSE surrogate t / (1 + t x)."""
    return t / (1.0 + t * x)


def lmmse_inv(t: float, y: float) -> float:
    """Inverse of ``lmmse`` in its second argument: 1/y - 1/t."""
    if not t > 0:
        raise DomainError("t must be > 0")
    if not 0 < y <= t:
        raise DomainError(f"lmmse_inv needs 0 < y <= t, got y={y}, t={t}")
    return 1.0 / y - 1.0 / t
