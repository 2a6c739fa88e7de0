import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import NOISE2, reference_links
from lifiwifi.channel import dbm_per_mhz_to_w_per_hz
from lifiwifi.errors import ConfigError, InfeasibleError
from lifiwifi.scenario import Scenario, equal_split, fixed_allocation


def round_trip(sc):
    return Scenario.from_json(sc.to_json())


class TestDefaults:
    def test_default_links_match_reference(self):
        (p1, p2), (r1, r2) = Scenario().links(), reference_links()
        assert p1 == r1
        assert p2 == r2

    def test_empty_document_is_default(self):
        assert Scenario.from_dict({}).to_json() == Scenario().to_json()

    def test_schema_tag(self):
        assert Scenario().to_dict()["schema"] == 1

    def test_rf_noise_default(self):
        assert Scenario().physics.noise_psd2 == NOISE2


class TestRoundTrip:
    def test_default(self):
        sc = Scenario()
        assert round_trip(sc).to_dict() == sc.to_dict()

    def test_nondefault_blocks(self):
        data = {
            "channel": {"lifi": {"distance": 3.0}, "wifi": {"ricean_k": "inf"},
                        "fading": "sampled", "gain2": [1e-4, -2e-4]},
            "constellations": {"optical": {"order": 4, "peak": 2.0, "mean_cap": "inf",
                                           "elec_cap": 3.0},
                               "rf": {"points": [[[1, 0], 0.5], [[-1, 0], 0.5]],
                                      "elec_cap": 1.0}},
            "budget": {"P_T": 0.3, "P_o": "inf", "P_ins": 2.0},
            "quadrature": {"method": "mc", "order": 5000, "seed": 11},
            "solver": {"objective": "lower_bound", "outer_tol": 10.0, "fw": {"max_iters": 50}},
            "allocation": {"q1_sq": 0.2},
            "seed": 5,
        }
        sc = Scenario.from_dict(data)
        assert round_trip(sc).to_dict() == sc.to_dict()
        assert math.isinf(sc.wifi.ricean_k)
        assert sc.gain2 == complex(1e-4, -2e-4)
        assert sc.solver.fw.max_iters == 50

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.5, 10.0), st.floats(0.0, 5.0), st.integers(1, 8),
           st.sampled_from([1, 4, 16]), st.integers(0, 2**31))
    def test_property(self, dist, total, order, n, seed):
        sc = Scenario.from_dict({"channel": {"lifi": {"distance": dist}},
                                 "constellations": {"optical": {"order": order,
                                                                "elec_cap": "inf"},
                                                    "rf": {"order": n}},
                                 "budget": {"P_T": total}, "seed": seed})
        again = round_trip(sc)
        assert again.to_dict() == sc.to_dict()
        assert again.links() == sc.links()


class TestErrors:
    @pytest.mark.parametrize("data, path", [
        ({"channel": {"lifi": {"distance": -1}}}, "channel.lifi.distance"),
        ({"constellations": {"rf": {"N": 15}}}, "constellations.rf"),
        ({"constellations": {"rf": {"order": 15}}}, "constellations.rf.order"),
        ({"budget": {"P_T": -1}}, "budget.P_T"),
        ({"solver": {"pgd": {"backtrack": 2}}}, "solver.pgd.backtrack"),
        ({"solver": {"objective": "upper"}}, "solver.objective"),
        ({"physics": {"B1": 0}}, "physics.B1"),
        ({"bogus": 1}, "scenario"),
        ({"seed": 1.5}, "seed"),
        ({"channel": {"fading": "rayleigh"}}, "channel.fading"),
        ({"allocation": {"q2_sq": -1}}, "allocation.q2_sq"),
    ])
    def test_path_qualified(self, data, path):
        with pytest.raises(ConfigError) as info:
            Scenario.from_dict(data)
        assert str(info.value).startswith(path)

    def test_bad_json(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            Scenario.from_json("{")

    def test_infeasible_caps(self):
        with pytest.raises(InfeasibleError, match="constellations.optical"):
            Scenario.from_dict({"constellations": {"optical": {"elec_cap": 0.01}}})

    def test_noise_given_twice(self):
        with pytest.raises(ConfigError, match="not both"):
            Scenario.from_dict({"physics": {"noise_psd2": 1e-20, "noise_psd2_dbm_mhz": -57}})

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            Scenario.load(tmp_path / "absent.json")


class TestUnits:
    def test_dbm_per_mhz(self):
        sc = Scenario.from_dict({"physics": {"noise_psd2_dbm_mhz": -60}})
        # -60 dBm/MHz = 1e-9 W per 1e6 Hz.
        assert sc.physics.noise_psd2 == pytest.approx(1e-15, rel=1e-12)
        assert sc.physics.noise_psd2 == dbm_per_mhz_to_w_per_hz(-60)


class TestGains:
    def test_overrides(self):
        sc = Scenario.from_dict({"channel": {"gain1": 2e-5, "gain2": 3e-4}})
        assert sc.gains() == (2e-5, 3e-4 + 0j)

    def test_sampled_fading_is_seeded(self):
        a = Scenario(fading="sampled", seed=4)
        b = Scenario(fading="sampled", seed=4)
        c = Scenario(fading="sampled", seed=5)
        assert a.gains()[1] == b.gains()[1]
        assert a.gains()[1] != c.gains()[1]

    def test_with_seed_reseeds_quadrature(self):
        sc = Scenario().with_seed(9)
        assert sc.seed == 9 and sc.quad.seed == 9


class TestFixedAllocation:
    def test_equal_split_spends_budget(self):
        sc = Scenario()
        q1, q2 = fixed_allocation(sc)
        pb = sc.problem()
        e1 = float(pb.optical.probs @ pb.optical.points**2)
        e2 = float(pb.rf.probs @ np.abs(pb.rf.points) ** 2)
        assert e1 * q1 == pytest.approx(0.05)
        assert e2 * q2 == pytest.approx(0.05)

    def test_explicit_values_win(self):
        sc = Scenario.from_dict({"allocation": {"q1_sq": 0.01, "q2_sq": 0.02}})
        assert fixed_allocation(sc) == (0.01, 0.02)

    def test_optical_capped(self):
        sc = Scenario.from_dict({"budget": {"P_T": 100.0}})
        pb = sc.problem()
        assert equal_split(pb)[0] == pytest.approx(pb.budget.tau_sq(pb.optical))

    def test_json_is_sorted_and_stable(self):
        text = Scenario().to_json()
        assert text == json.dumps(json.loads(text), indent=2, sort_keys=True)
