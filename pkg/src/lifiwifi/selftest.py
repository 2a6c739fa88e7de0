"""Fast built-in oracle checks behind ``lifiwifi selftest``.

Each check compares a library result with a value derived independently
(closed form or brute force) and takes well under a second.
"""
import math

import numpy as np

from .channel import lambertian_order, wifi_path_loss
from .constellation import FeasibleSet, make_pam, make_qam, project_feasible
from .power import PowerBudget, wf_allocate
from .rate import LinkPhysics, link_bounds, link_rate, mmse, mutual_information


def _lambertian():
    assert abs(lambertian_order(60.0) - 1.0) < 1e-12
    assert abs(lambertian_order(45.0) - 2.0) < 1e-12


def _path_loss():
    assert abs(wifi_path_loss(1.0, 2.4e9, 5.0) - (20 * math.log10(2.4e9) - 147.5)) < 1e-9


def _projection():
    fs = FeasibleSet("rf", 2, np.zeros((0, 2)), np.zeros(0))
    np.testing.assert_allclose(project_feasible(np.array([-0.2, 1.2]), fs), [0.0, 1.0], atol=1e-12)


def _water_filling():
    # Unit parameters: 1/(2(1+q1)) = 1/(1+q2), q1 + q2 = 4.
    phys = LinkPhysics(1.0, 1.0, 1.0)
    c1 = make_pam(2, math.sqrt(2.0))
    c2 = make_qam(4, 1.0)
    alloc = wf_allocate(c1, c2, phys, phys, PowerBudget(4.0), tol=1e-12)
    # Equiprobable {0, sqrt2} has unit power.
    assert abs(alloc.q1_sq - 1.0) < 1e-6 and abs(alloc.q2_sq - 3.0) < 1e-6, alloc


def _saturation():
    c = make_qam(4, 1.0)
    phys = LinkPhysics(1.0, 1.0, 1.0)
    r = link_rate(c, 1e4, phys).rate
    assert abs(r - 2.0) < 0.02, r


def _sandwich():
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = make_pam(4, 1.0)
        c = c.with_probs(rng.dirichlet(np.ones(4)))
        phys = LinkPhysics(1.0, 1.0, 1.0)
        q = 10 ** rng.uniform(-1, 2)
        lo, hi = link_bounds(c, q, phys)
        r = link_rate(c, q, phys).rate
        assert lo <= r <= hi, (lo, r, hi)


def _mmse_relation():
    c = make_pam(2, 2.0)
    h = 1e-4
    d = (mutual_information(c, 1.0 + h) - mutual_information(c, 1.0 - h)) / (2 * h)
    assert abs(d - 0.5 * mmse(c, 1.0)) < 1e-2 * d


CHECKS = (
    ("lambertian order", _lambertian),
    ("path loss at 1 m", _path_loss),
    ("simplex projection", _projection),
    ("water-filling unit case", _water_filling),
    ("4-QAM saturation", _saturation),
    ("bound sandwich", _sandwich),
    ("I-MMSE relation", _mmse_relation),
)


def run_all(stream) -> bool:
    ok = True
    for name, check in CHECKS:
        try:
            check()
            print(f"PASS {name}", file=stream)
        except AssertionError as err:
            ok = False
            print(f"FAIL {name}: {err}", file=stream)
    return ok
