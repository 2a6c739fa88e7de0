"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lifiwifi import _pykernels, kernels
from lifiwifi.constellation import make_pam, make_qam
from lifiwifi.quadrature import QuadratureSpec
from lifiwifi.rate import LinkPhysics, link_model

ck = pytest.importorskip("lifiwifi._ckernels")


def _case(seed, complex_valued):
    rng = np.random.default_rng(seed)
    if complex_valued:
        c = make_qam(16, 1.0)
    else:
        c = make_pam(8, 1.0)
    p = rng.dirichlet(np.ones(c.size))
    p[rng.integers(c.size)] = 0.0
    p /= p.sum()
    model = link_model(c, 10 ** rng.uniform(-1, 2), LinkPhysics(1.0, 1.0, 1.0))
    z, w = QuadratureSpec("gh", 24).nodes(model.dim)
    return (*model.exponents(), z, w, p)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.booleans())
def test_mixture_logsum_agrees(seed, complex_valued):
    args = _case(seed, complex_valued)
    L1, G1, F1 = _pykernels.mixture_logsum(*args, grad=True)
    L2, G2, F2 = ck.mixture_logsum(*args, grad=True)
    np.testing.assert_allclose(L1, L2, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(G1, G2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(F1, F2, rtol=1e-11, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 12))
def test_projections_agree(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    np.testing.assert_allclose(_pykernels.simplex_project(x), ck.simplex_project(x), atol=1e-12)
    pts = np.linspace(0.0, 1.0, n)
    A = np.vstack([pts, pts**2])
    b = np.array([rng.uniform(0.2, 0.6), rng.uniform(0.1, 0.4)])
    p1, l1 = _pykernels.capped_simplex_project(x, A, b)
    p2, l2 = ck.capped_simplex_project(x, A, b)
    np.testing.assert_allclose(p1, p2, atol=1e-9)
