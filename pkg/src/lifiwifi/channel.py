"""Optical and RF channel gains.

Optical: Lambertian LED with a non-imaging concentrator at the photodiode.
RF: free-space loss with a breakpoint extension, log-normal shadowing and
Ricean small-scale fading.  Angles are in degrees throughout.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, DomainError

# Extra path-loss slope beyond the breakpoint distance, dB per decade.
_FAR_SLOPE_DB = 35.0


@dataclass(frozen=True)
class LiFiGeometry:
    half_power_angle: float = 60.0
    detector_area: float = 1e-4
    distance: float = 4.0
    radiance_angle: float = 0.0
    incidence_angle: float = 0.0
    filter_gain: float = 1.0
    refractive_index: float = 1.5
    fov: float = 90.0

    def __post_init__(self):
        if not self.distance > 0:
            raise ConfigError("must be > 0", "distance")
        if not self.detector_area > 0:
            raise ConfigError("must be > 0", "detector_area")
        if not 0 < self.half_power_angle < 90:
            raise ConfigError("must lie in (0, 90) degrees", "half_power_angle")
        if not 0 < self.fov <= 90:
            raise ConfigError("must lie in (0, 90] degrees", "fov")
        if not self.refractive_index >= 1:
            raise ConfigError("must be >= 1", "refractive_index")


@dataclass(frozen=True)
class WiFiGeometry:
    distance: float = 4.0
    breakpoint_distance: float = 5.0
    carrier_freq: float = 2.4e9
    ricean_k: float = 1.0
    aoa: float = 45.0
    shadow_std_near: float = 3.0
    shadow_std_far: float = 5.0

    def __post_init__(self):
        for name in ("distance", "breakpoint_distance", "carrier_freq"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", name)
        if not self.ricean_k >= 0:
            raise ConfigError("must be >= 0 (inf allowed)", "ricean_k")
        if not (self.shadow_std_near >= 0 and self.shadow_std_far >= 0):
            raise ConfigError("must be >= 0", "shadow_std")

    @property
    def shadow_std(self) -> float:
        if self.distance <= self.breakpoint_distance:
            return self.shadow_std_near
        return self.shadow_std_far


@dataclass(frozen=True)
class FadingSample:
    scatter: complex = 0j
    shadow_db: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.scatter) and np.isfinite(self.shadow_db)):
            raise ConfigError("fading sample must be finite", "fading")


# Mean of the fading draw; used for reproducible, fading-free evaluations.
DETERMINISTIC_FADING = FadingSample()


def lambertian_order(half_power_angle: float) -> float:
    """Lambertian mode number from the LED semi-angle at half power."""
    if not 0 < half_power_angle < 90:
        raise DomainError(f"half-power angle {half_power_angle} outside (0, 90) degrees")
    return -math.log(2.0) / math.log(math.cos(math.radians(half_power_angle)))


def concentrator_gain(incidence_angle: float, refractive_index: float, fov: float) -> float:
    if 0 <= incidence_angle <= fov:
        return refractive_index**2 / math.sin(math.radians(fov)) ** 2
    return 0.0


def lifi_gain(geom: LiFiGeometry) -> float:
    gc = concentrator_gain(geom.incidence_angle, geom.refractive_index, geom.fov)
    if gc == 0.0:
        return 0.0
    m = lambertian_order(geom.half_power_angle)
    cos_rad = math.cos(math.radians(geom.radiance_angle))
    cos_inc = math.cos(math.radians(geom.incidence_angle))
    if cos_rad <= 0:
        return 0.0
    g = ((m + 1) * geom.detector_area / (2 * math.pi * geom.distance**2)
         * cos_rad**m * cos_inc * geom.filter_gain * gc)
    return max(g, 0.0)


def wifi_path_loss(distance: float, carrier_freq: float, breakpoint_distance: float) -> float:
    """Deterministic part of the RF loss in dB (shadowing excluded)."""
    if not distance > 0:
        raise DomainError("distance must be > 0")
    loss = 20 * math.log10(distance) + 20 * math.log10(carrier_freq) - 147.5
    if distance > breakpoint_distance:
        loss += _FAR_SLOPE_DB * math.log10(distance / breakpoint_distance)
    return loss


def small_scale_gain(ricean_k: float, aoa: float, scatter: complex) -> complex:
    los = np.exp(1j * math.radians(aoa))
    if math.isinf(ricean_k):
        return complex(los)
    return complex(math.sqrt(ricean_k / (ricean_k + 1)) * los
                   + math.sqrt(1 / (ricean_k + 1)) * scatter)


def wifi_gain(geom: WiFiGeometry, fading: FadingSample = DETERMINISTIC_FADING) -> complex:
    loss = wifi_path_loss(geom.distance, geom.carrier_freq, geom.breakpoint_distance)
    gr = small_scale_gain(geom.ricean_k, geom.aoa, fading.scatter)
    return gr * 10 ** (-(loss + fading.shadow_db) / 20)


def sample_fading(seed: int, geom: WiFiGeometry) -> FadingSample:
    """One fading draw: circular CN(0, 1) scatter plus N(0, std^2) shadowing in dB."""
    rng = np.random.default_rng(seed)
    re, im = rng.standard_normal(2) / math.sqrt(2)
    shadow = rng.standard_normal() * geom.shadow_std
    return FadingSample(complex(re, im), float(shadow))


def dbm_per_mhz_to_w_per_hz(level_dbm_mhz: float) -> float:
    """Noise PSD conversion: dBm/MHz -> W/Hz is 10^((x - 30)/10) / 1e6."""
    return 10 ** ((level_dbm_mhz - 30.0) / 10.0) / 1e6
