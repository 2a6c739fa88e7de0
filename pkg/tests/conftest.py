import numpy as np
import pytest

from lifiwifi.channel import LiFiGeometry, WiFiGeometry, dbm_per_mhz_to_w_per_hz, lifi_gain, wifi_gain
from lifiwifi.constellation import make_pam, make_qam
from lifiwifi.power import PowerBudget
from lifiwifi.alternate import Problem
from lifiwifi.rate import LinkPhysics

# Reference indoor scenario (40/20 MHz, 8-PAM with A=1, mean and power caps 0.5; unit-cap 16-QAM).
B1, B2 = 40e6, 20e6
NOISE1 = 1e-21
NOISE2 = dbm_per_mhz_to_w_per_hz(-57.0)


def reference_links():
    return (LinkPhysics(lifi_gain(LiFiGeometry()), B1, NOISE1),
            LinkPhysics(wifi_gain(WiFiGeometry()), B2, NOISE2))


def reference_problem(total=0.1, p_o=0.8, p_ins=1.0, optical=None, rf=None):
    phys1, phys2 = reference_links()
    optical = make_pam(8, 1.0, 0.5, 0.5) if optical is None else optical
    rf = make_qam(16, 1.0) if rf is None else rf
    return Problem(optical, rf, phys1, phys2, PowerBudget(total, p_o, p_ins))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_phys():
    return LinkPhysics(1.0, 1.0, 1.0)
