import math

import numpy as np
import pytest

from lifiwifi.errors import ConfigError
from lifiwifi.quadrature import QuadratureSpec


class TestRules:
    @pytest.mark.parametrize("method,order", [("gh", 48), ("grid", 801)])
    def test_gaussian_moments(self, method, order):
        z, w = QuadratureSpec(method, order).nodes(1)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        assert w @ z[:, 0] ** 2 == pytest.approx(1.0, abs=1e-8)
        assert w @ z[:, 0] ** 4 == pytest.approx(3.0, abs=1e-7)

    def test_two_dimensional_tensor(self):
        z, w = QuadratureSpec("gh", 20).nodes(2)
        assert z.shape == (400, 2)
        assert w @ (z[:, 0] ** 2 * z[:, 1] ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_monte_carlo_seeded(self):
        a = QuadratureSpec("mc", 1000, seed=3).nodes(2)
        b = QuadratureSpec("mc", 1000, seed=3).nodes(2)
        c = QuadratureSpec("mc", 1000, seed=4).nodes(2)
        np.testing.assert_array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])

    def test_truncation_box(self):
        z, _ = QuadratureSpec("gh", 64).nodes(1, truncation=4.0)
        assert np.all(np.abs(z) <= 4.0)

    def test_nodes_read_only(self):
        z, w = QuadratureSpec().nodes(1)
        with pytest.raises(ValueError):
            w[0] = 1.0

    def test_aliases_normalised(self):
        assert QuadratureSpec("gh").method == "gauss-hermite"
        assert QuadratureSpec("mc").stochastic


class TestValidation:
    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            QuadratureSpec("simpson")

    def test_truncation_floor(self):
        with pytest.raises(ConfigError):
            QuadratureSpec(truncation=3.0)

    def test_low_order_warns(self):
        assert QuadratureSpec(order=4).warnings()
        assert not QuadratureSpec(order=8).warnings()
