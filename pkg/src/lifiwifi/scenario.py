"""Scenario documents: one JSON object with named blocks.

Every block is optional; missing keys take the default scenario values
(8-PAM over LiFi, 16-QAM over WiFi, the reference indoor geometry).
Unknown keys are rejected, and every error carries the dotted path of
the offending key.  ``Scenario.to_dict`` emits the fully resolved form,
so load -> dump -> load is the identity.

Noise on the RF link may be given either in W/Hz (``noise_psd2``) or in
dBm/MHz (``noise_psd2_dbm_mhz``); the latter converts as
``10**((x - 30) / 10) / 1e6``.
"""
from dataclasses import asdict, dataclass, field, fields, replace
import json
import math

from .alternate import AlternatingConfig, Problem
from .channel import (LiFiGeometry, WiFiGeometry, dbm_per_mhz_to_w_per_hz, lifi_gain,
                      sample_fading, wifi_gain, DETERMINISTIC_FADING)
from .constellation import (OpticalConstellation, RFConstellation, constellation_from_dict,
                            make_pam, make_qam)
from .errors import ConfigError, InfeasibleError
from .power import PowerBudget
from .probopt import FWConfig, PGDConfig
from .quadrature import QuadratureSpec
from .rate import LinkPhysics

SCHEMA_VERSION = 1
RF_NOISE_DBM_MHZ = -57.0
FADING_MODES = ("deterministic", "sampled")


def _check_keys(data, allowed, path):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", path)
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {', '.join(extra)}", path)


def _join(path, sub):
    if not sub:
        return path
    return sub if sub.startswith(path + ".") else f"{path}.{sub}"


# Factory argument names that differ from their config keys.
_KEY_ALIASES = {"M": "order", "N": "order"}


def _rewrap(err: ConfigError, path):
    sub = err.path.split(".")[-1] if err.path else None
    sub = _KEY_ALIASES.get(sub, sub)
    if sub == path.split(".")[-1]:
        sub = None
    return ConfigError(err.message, _join(path, sub))


def _number(v, path, allow_inf=False):
    if isinstance(v, str) and allow_inf and v.lower() in ("inf", "infinity"):
        return math.inf
    if v is None and allow_inf:
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", path)
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError("must be finite", path)
    return v


def _json_num(v):
    return "inf" if math.isinf(v) else v


def _dataclass(cls, data, path, inf_ok=()):
    """Build a frozen config dataclass from a dict, defaults for missing keys."""
    names = [f.name for f in fields(cls) if not f.name.startswith("_")]
    _check_keys(data, names, path)
    kwargs = {}
    for k, v in data.items():
        default = getattr(cls, k, None)
        if isinstance(default, int) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"expected an integer, got {v!r}", f"{path}.{k}")
            kwargs[k] = v
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"expected true/false, got {v!r}", f"{path}.{k}")
            kwargs[k] = v
        elif isinstance(default, str):
            if not isinstance(v, str):
                raise ConfigError(f"expected a string, got {v!r}", f"{path}.{k}")
            kwargs[k] = v
        else:
            kwargs[k] = _number(v, f"{path}.{k}", allow_inf=k in inf_ok)
    try:
        return cls(**kwargs)
    except ConfigError as err:
        raise _rewrap(err, path) from None


def _parse_gain(v, path, complex_ok):
    if v is None:
        return None
    if complex_ok and isinstance(v, list):
        if len(v) != 2:
            raise ConfigError("complex gain must be [re, im]", path)
        return complex(_number(v[0], path + "[0]"), _number(v[1], path + "[1]"))
    g = _number(v, path)
    return complex(g) if complex_ok else g


def _parse_optical(d, path):
    if "points" in d:
        _check_keys(d, ("points", "peak", "mean_cap", "elec_cap", "kind"), path)
        try:
            return constellation_from_dict({**d, "kind": "optical"})
        except InfeasibleError as err:
            raise InfeasibleError(f"{path}: {err}") from None
        except (ConfigError, KeyError, TypeError, IndexError, ValueError) as err:
            sub = err.path if isinstance(err, ConfigError) else None
            msg = err.message if isinstance(err, ConfigError) else f"malformed ({err})"
            raise ConfigError(msg, _join(path, sub)) from None
    _check_keys(d, ("order", "peak", "mean_cap", "elec_cap"), path)
    order = d.get("order", 8)
    if isinstance(order, bool) or not isinstance(order, int):
        raise ConfigError(f"expected an integer, got {order!r}", path + ".order")
    peak = _number(d.get("peak", 1.0), path + ".peak")
    mean_cap = _number(d.get("mean_cap", 0.5), path + ".mean_cap", allow_inf=True)
    elec_cap = _number(d.get("elec_cap", 0.5), path + ".elec_cap", allow_inf=True)
    try:
        return make_pam(order, peak, mean_cap, elec_cap)
    except ConfigError as err:
        raise _rewrap(err, path) from None
    except InfeasibleError as err:
        raise InfeasibleError(f"{path}: {err}") from None


def _parse_rf(d, path):
    if "points" in d:
        _check_keys(d, ("points", "elec_cap", "kind"), path)
        try:
            return constellation_from_dict({**d, "kind": "rf"})
        except InfeasibleError as err:
            raise InfeasibleError(f"{path}: {err}") from None
        except (ConfigError, KeyError, TypeError, IndexError, ValueError) as err:
            sub = err.path if isinstance(err, ConfigError) else None
            msg = err.message if isinstance(err, ConfigError) else f"malformed ({err})"
            raise ConfigError(msg, _join(path, sub)) from None
    _check_keys(d, ("order", "elec_cap"), path)
    order = d.get("order", 16)
    if isinstance(order, bool) or not isinstance(order, int):
        raise ConfigError(f"expected an integer, got {order!r}", path + ".order")
    cap = _number(d.get("elec_cap", 1.0), path + ".elec_cap")
    try:
        return make_qam(order, cap)
    except ConfigError as err:
        raise _rewrap(err, path) from None
    except InfeasibleError as err:
        raise InfeasibleError(f"{path}: {err}") from None


@dataclass(frozen=True)
class Physics:
    B1: float = 40e6
    B2: float = 20e6
    noise_psd1: float = 1e-21
    noise_psd2: float = dbm_per_mhz_to_w_per_hz(RF_NOISE_DBM_MHZ)
    eta1: float = 1.0
    eta2: float = 1.0
    # Photodiode bias current; carried for completeness, no formula reads it.
    I_H: float = 8.0

    def __post_init__(self):
        for name in ("B1", "B2", "noise_psd1", "noise_psd2", "eta1", "eta2"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", name)


@dataclass(frozen=True)
class Allocation:
    """Fixed (q1_sq, q2_sq) for ``rate``; None means half the budget on each link."""

    q1_sq: float = None
    q2_sq: float = None


@dataclass(frozen=True)
class Scenario:
    lifi: LiFiGeometry = LiFiGeometry()
    wifi: WiFiGeometry = WiFiGeometry()
    fading: str = "deterministic"
    gain1: float = None
    gain2: complex = None
    optical: OpticalConstellation = field(default_factory=lambda: make_pam(8, 1.0, 0.5, 0.5))
    rf: RFConstellation = field(default_factory=lambda: make_qam(16, 1.0))
    physics: Physics = Physics()
    budget: PowerBudget = PowerBudget(0.1, 0.8, 1.0)
    quad: QuadratureSpec = QuadratureSpec()
    solver: AlternatingConfig = AlternatingConfig()
    allocation: Allocation = Allocation()
    seed: int = 0

    def __post_init__(self):
        if self.fading not in FADING_MODES:
            raise ConfigError(f"expected one of {FADING_MODES}", "channel.fading")

    # Channel -------------------------------------------------------------

    def gains(self):
        g1 = self.gain1 if self.gain1 is not None else lifi_gain(self.lifi)
        if self.gain2 is not None:
            g2 = self.gain2
        else:
            fade = (sample_fading(self.seed, self.wifi) if self.fading == "sampled"
                    else DETERMINISTIC_FADING)
            g2 = wifi_gain(self.wifi, fade)
        return g1, g2

    def links(self):
        g1, g2 = self.gains()
        ph = self.physics
        return (LinkPhysics(g1, ph.B1, ph.noise_psd1, ph.eta1),
                LinkPhysics(g2, ph.B2, ph.noise_psd2, ph.eta2))

    def problem(self) -> Problem:
        phys1, phys2 = self.links()
        return Problem(self.optical, self.rf, phys1, phys2, self.budget, self.quad)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed, quad=replace(self.quad, seed=seed))

    # Serialisation -------------------------------------------------------

    def to_dict(self):
        g2 = None if self.gain2 is None else [self.gain2.real, self.gain2.imag]
        opt, rf = self.optical.to_dict(), self.rf.to_dict()
        opt.pop("kind")
        rf.pop("kind")
        solver = {
            "objective": self.solver.objective,
            "outer_tol": self.solver.outer_tol,
            "max_outer": self.solver.max_outer,
            "wf_tol": self.solver.wf_tol,
            "lb_tol": self.solver.lb_tol,
            "budget_uses_caps": self.solver.budget_uses_caps,
            "pgd": asdict(self.solver.pgd),
            "fw": asdict(self.solver.fw),
        }
        return {
            "schema": SCHEMA_VERSION,
            "channel": {
                "lifi": asdict(self.lifi),
                "wifi": {k: _json_num(v) for k, v in asdict(self.wifi).items()},
                "fading": self.fading,
                "gain1": self.gain1,
                "gain2": g2,
            },
            "constellations": {"optical": opt, "rf": rf},
            "physics": asdict(self.physics),
            "budget": {"P_T": self.budget.total_elec,
                       "P_o": _json_num(self.budget.max_avg_optical),
                       "P_ins": _json_num(self.budget.max_inst_optical)},
            "quadrature": asdict(self.quad),
            "solver": solver,
            "allocation": asdict(self.allocation),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        _check_keys(data, ("schema", "channel", "constellations", "physics", "budget",
                           "quadrature", "solver", "allocation", "seed"), "scenario")
        schema = data.get("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {schema!r}", "schema")
        kw = {}

        ch = data.get("channel", {})
        _check_keys(ch, ("lifi", "wifi", "fading", "gain1", "gain2"), "channel")
        kw["lifi"] = _dataclass(LiFiGeometry, ch.get("lifi", {}), "channel.lifi")
        kw["wifi"] = _dataclass(WiFiGeometry, ch.get("wifi", {}), "channel.wifi",
                                inf_ok=("ricean_k",))
        fading = ch.get("fading", "deterministic")
        if fading not in FADING_MODES:
            raise ConfigError(f"expected one of {FADING_MODES}, got {fading!r}", "channel.fading")
        kw["fading"] = fading
        g1 = _parse_gain(ch.get("gain1"), "channel.gain1", complex_ok=False)
        if g1 is not None and g1 < 0:
            raise ConfigError("must be >= 0", "channel.gain1")
        kw["gain1"] = g1
        kw["gain2"] = _parse_gain(ch.get("gain2"), "channel.gain2", complex_ok=True)

        cons = data.get("constellations", {})
        _check_keys(cons, ("optical", "rf"), "constellations")
        kw["optical"] = _parse_optical(cons.get("optical", {}), "constellations.optical")
        kw["rf"] = _parse_rf(cons.get("rf", {}), "constellations.rf")

        ph = dict(data.get("physics", {}))
        _check_keys(ph, [f.name for f in fields(Physics)] + ["noise_psd2_dbm_mhz"], "physics")
        if "noise_psd2_dbm_mhz" in ph:
            if "noise_psd2" in ph:
                raise ConfigError("give noise_psd2 or noise_psd2_dbm_mhz, not both", "physics")
            level = _number(ph.pop("noise_psd2_dbm_mhz"), "physics.noise_psd2_dbm_mhz")
            ph["noise_psd2"] = dbm_per_mhz_to_w_per_hz(level)
        kw["physics"] = _dataclass(Physics, ph, "physics")

        bud = data.get("budget", {})
        _check_keys(bud, ("P_T", "P_o", "P_ins"), "budget")
        try:
            kw["budget"] = PowerBudget(
                _number(bud.get("P_T", 0.1), "budget.P_T"),
                _number(bud.get("P_o", 0.8), "budget.P_o", allow_inf=True),
                _number(bud.get("P_ins", 1.0), "budget.P_ins", allow_inf=True))
        except ConfigError as err:
            names = {"total_elec": "P_T", "max_avg_optical": "P_o", "max_inst_optical": "P_ins"}
            raise ConfigError(err.message, "budget." + names[err.path.split(".")[-1]]) from None

        kw["quad"] = _dataclass(QuadratureSpec, data.get("quadrature", {}), "quadrature")

        sv = dict(data.get("solver", {}))
        _check_keys(sv, ("objective", "outer_tol", "max_outer", "wf_tol", "lb_tol",
                         "budget_uses_caps", "pgd", "fw"), "solver")
        pgd = _dataclass(PGDConfig, sv.pop("pgd", {}), "solver.pgd")
        fw = _dataclass(FWConfig, sv.pop("fw", {}), "solver.fw")
        outer_tol = sv.pop("outer_tol", None)
        if outer_tol is not None:
            outer_tol = _number(outer_tol, "solver.outer_tol")
        base = _dataclass(AlternatingConfig, sv, "solver")
        try:
            kw["solver"] = replace(base, pgd=pgd, fw=fw, outer_tol=outer_tol)
        except ConfigError as err:
            raise _rewrap(err, "solver") from None

        al = data.get("allocation", {})
        _check_keys(al, ("q1_sq", "q2_sq"), "allocation")
        q = {}
        for k in ("q1_sq", "q2_sq"):
            if al.get(k) is not None:
                q[k] = _number(al[k], f"allocation.{k}")
                if q[k] < 0:
                    raise ConfigError("must be >= 0", f"allocation.{k}")
        kw["allocation"] = Allocation(**q)

        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"expected an integer, got {seed!r}", "seed")
        kw["seed"] = seed
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON ({err.msg} at line {err.lineno})", "scenario") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def equal_split(problem: Problem, budget_uses_caps=False):
    """Half the electrical budget on each link, optical side capped by its amplitude limit."""
    from .power import budget_coefficients

    k1, k2 = budget_coefficients(problem.optical, problem.rf, problem.phys1, problem.phys2,
                                 budget_uses_caps)
    half = 0.5 * problem.budget.total_elec
    q1 = min(half / k1, problem.budget.tau_sq(problem.optical)) if k1 > 0 else 0.0
    q2 = half / k2 if k2 > 0 else 0.0
    return q1, q2


def fixed_allocation(scenario: Scenario, problem: Problem = None):
    problem = scenario.problem() if problem is None else problem
    q1, q2 = equal_split(problem, scenario.solver.budget_uses_caps)
    a = scenario.allocation
    return (q1 if a.q1_sq is None else a.q1_sq, q2 if a.q2_sq is None else a.q2_sq)


__all__ = ["Scenario", "Physics", "Allocation", "equal_split", "fixed_allocation",
           "SCHEMA_VERSION"]
