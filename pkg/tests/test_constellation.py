import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp
from scipy.optimize import linprog

from lifiwifi.constellation import (FeasibleSet, OpticalConstellation, RFConstellation,
                                    constellation_from_dict, lp_vertex, make_pam, make_qam,
                                    moments, project_feasible)
from lifiwifi.errors import ConfigError, InfeasibleError


def plain_simplex(n):
    return FeasibleSet("rf", n, np.zeros((0, n)), np.zeros(0))


def random_optical_set(rng, n):
    """8-ish level PAM with both caps set between the min and the equiprobable value."""
    pts = np.linspace(0.0, 1.0, n)
    mean_cap = rng.uniform(0.15, 0.6)
    pow_cap = rng.uniform(0.08, 0.45)
    return FeasibleSet("optical", n, np.vstack([pts, pts**2]), np.array([mean_cap, pow_cap]))


class TestMakePam:
    def test_two_levels(self):
        c = make_pam(2, 2.0)
        np.testing.assert_array_equal(c.points, [0.0, 2.0])
        np.testing.assert_array_equal(c.probs, [0.5, 0.5])

    def test_single_level(self):
        c = make_pam(1, 1.0)
        np.testing.assert_array_equal(c.points, [0.0])
        np.testing.assert_array_equal(c.probs, [1.0])

    def test_eight_levels_moments(self):
        # Grid 0..8 step 8/7: mean 4, power (64/49) * 140 / 8 = 160/7.
        c = make_pam(8, 8.0, 4.0, 24.0)
        mean, power = moments(c)
        assert mean == pytest.approx(4.0)
        assert power == pytest.approx(160 / 7)

    def test_infeasible_caps(self):
        with pytest.raises(InfeasibleError):
            make_pam(8, 8.0, 3.0, 24.0)
        with pytest.raises(InfeasibleError):
            make_pam(8, 8.0, 4.0, 20.0)

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            make_pam(0, 1.0)
        with pytest.raises(ConfigError):
            make_pam(4, 0.0)


class TestMakeQam:
    def test_four_points(self):
        c = make_qam(4, 1.0)
        c_abs = np.abs(c.points.real)
        np.testing.assert_allclose(c_abs, math.sqrt(0.5))
        np.testing.assert_allclose(np.abs(c.points.imag), math.sqrt(0.5))

    def test_sixteen_points_scaling(self):
        c = make_qam(16, 1.0)
        # Unit-spacing grid {+-1, +-3}^2 has power 10.
        levels = np.unique(np.round(c.points.real * math.sqrt(10), 12))
        np.testing.assert_allclose(levels, [-3, -1, 1, 3])
        assert moments(c)[1] == pytest.approx(1.0, abs=1e-15)

    def test_single_point(self):
        c = make_qam(1)
        assert c.points.tolist() == [0j]

    @pytest.mark.parametrize("n", [2, 8, 15, 0])
    def test_non_square(self, n):
        with pytest.raises(ConfigError):
            make_qam(n)

    @given(st.sampled_from([4, 16, 64]), st.floats(0.01, 100.0))
    def test_power_equals_cap(self, n, cap):
        assert moments(make_qam(n, cap))[1] == pytest.approx(cap, rel=1e-12)


class TestMoments:
    def test_two_point(self):
        assert moments(make_pam(2, 2.0)) == pytest.approx((1.0, 2.0))

    def test_single_point(self):
        c = OpticalConstellation([3.0], [1.0], 3.0)
        assert moments(c) == pytest.approx((3.0, 9.0))

    @given(hnp.arrays(np.float64, 6, elements=st.floats(0.01, 1.0)),
           hnp.arrays(np.float64, 6, elements=st.floats(0.01, 1.0)),
           st.floats(0.0, 1.0))
    def test_linear_in_probs(self, a, b, t):
        a, b = a / a.sum(), b / b.sum()
        c = make_pam(6, 2.0)
        mix = moments(c.with_probs(t * a + (1 - t) * b))
        ma, mb = moments(c.with_probs(a)), moments(c.with_probs(b))
        np.testing.assert_allclose(mix, [t * x + (1 - t) * y for x, y in zip(ma, mb)], rtol=1e-12)


class TestValidation:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            OpticalConstellation([0.0, 1.0], [0.5, 0.6], 1.0)

    def test_points_within_peak(self):
        with pytest.raises(ConfigError):
            OpticalConstellation([0.0, 2.0], [0.5, 0.5], 1.0)

    def test_rf_power_cap(self):
        with pytest.raises(InfeasibleError):
            RFConstellation([1.0, -1.0], [0.5, 0.5], 0.5)

    def test_round_trip(self):
        for c in (make_pam(4, 1.0, 0.6, 0.5), make_qam(16, 2.0), make_pam(3, 1.0)):
            back = constellation_from_dict(c.to_dict())
            np.testing.assert_array_equal(back.points, c.points)
            np.testing.assert_array_equal(back.probs, c.probs)
            assert back.to_dict() == c.to_dict()


class TestProjection:
    def test_feasible_point_unchanged(self):
        fs = make_pam(4, 1.0, 0.6, 0.5).feasible_set()
        p = np.array([0.4, 0.3, 0.2, 0.1])
        np.testing.assert_array_equal(project_feasible(p, fs), p)

    def test_vertex_overshoot(self):
        np.testing.assert_allclose(project_feasible(np.array([-0.2, 1.2]), plain_simplex(2)),
                                   [0.0, 1.0], atol=1e-12)

    def test_binding_power_cap_against_grid(self):
        # Points {0, 2}, power cap 0.2 allows p2 <= 0.05.
        fs = FeasibleSet("optical", 2, np.array([[0.0, 4.0]]), np.array([0.2]))
        target = np.array([0.9, 0.1])
        t = np.arange(0.0, 1.0 + 1e-12, 1e-4)
        ok = 4 * t <= 0.2 + 1e-12
        d = (1 - t - target[0]) ** 2 + (t - target[1]) ** 2
        t_best = t[ok][np.argmin(d[ok])]
        np.testing.assert_allclose(project_feasible(target, fs), [1 - t_best, t_best], atol=1e-4)
        np.testing.assert_allclose(project_feasible(target, fs), [0.95, 0.05], atol=1e-10)

    def test_empty_set(self):
        fs = FeasibleSet("optical", 2, np.array([[1.0, 2.0]]), np.array([0.5]))
        with pytest.raises(InfeasibleError):
            project_feasible(np.array([0.5, 0.5]), fs)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 10))
    def test_idempotent_and_feasible(self, seed, n):
        rng = np.random.default_rng(seed)
        fs = random_optical_set(rng, n)
        p = rng.normal(size=n)
        q = project_feasible(p, fs)
        assert fs.contains(q, tol=1e-8)
        np.testing.assert_allclose(project_feasible(q, fs), q, atol=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nearest_among_random_feasible(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 9))
        fs = random_optical_set(rng, n)
        p = rng.normal(scale=0.5, size=n) + 1.0 / n
        q = project_feasible(p, fs)
        V = fs.vertices()
        W = rng.dirichlet(np.ones(V.shape[0]), size=1000)
        others = W @ V
        dist = np.linalg.norm(others - p, axis=1)
        assert np.linalg.norm(q - p) <= dist.min() + 1e-9


class TestLPVertex:
    def test_plain_simplex(self):
        np.testing.assert_array_equal(lp_vertex(np.array([3.0, 1.0, 2.0]), plain_simplex(3)),
                                      [0.0, 1.0, 0.0])

    def test_tie_goes_to_lowest_index(self):
        np.testing.assert_array_equal(lp_vertex(np.array([1.0, 1.0]), plain_simplex(2)),
                                      [1.0, 0.0])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_linprog(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        fs = random_optical_set(rng, n)
        g = rng.normal(size=n)
        v = lp_vertex(g, fs)
        ref = linprog(g, A_ub=fs.caps, b_ub=fs.bounds, A_eq=np.ones((1, n)), b_eq=[1.0],
                      bounds=[(0, None)] * n, method="highs")
        assert ref.status == 0
        assert fs.contains(v, tol=1e-9)
        assert g @ v == pytest.approx(ref.fun, abs=1e-9)
        # An extreme point has at most 1 + (number of caps) nonzero entries.
        assert np.count_nonzero(v > 1e-12) <= 1 + fs.caps.shape[0]
