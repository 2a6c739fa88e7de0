import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from lifiwifi import cli
from lifiwifi.rate import CSV_COLUMNS, rate_aggregate
from lifiwifi.scenario import Scenario, fixed_allocation

TINY = {"constellations": {"optical": {"order": 1}, "rf": {"order": 1}}}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0] == cli.SCHEMA_LINE
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.fixture
def write_scenario(tmp_path):
    def _write(data, name="sc.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return _write


class TestParsing:
    def test_range(self):
        np.testing.assert_allclose(cli.parse_range("0.1:0.4:4", "P_T"), [0.1, 0.2, 0.3, 0.4])
        np.testing.assert_allclose(cli.parse_range("-10:20:2", "snr"), [-10, 20])
        assert cli.parse_range("0.5:0.5:1", "P_T").tolist() == [0.5]

    @pytest.mark.parametrize("text, axis", [("1:2", "P_T"), ("a:b:3", "P_T"), ("2:1:3", "P_T"),
                                            ("0:1:3", "P_T"), ("1:2:0", "B1"),
                                            ("1:inf:3", "snr")])
    def test_bad_range(self, text, axis):
        with pytest.raises(cli.ConfigError):
            cli.parse_range(text, axis)

    def test_p_ins_axis_couples_average_limit(self):
        sc = cli.apply_axis(Scenario(), "P_ins", 0.5)
        assert sc.budget.max_inst_optical == 0.5
        assert sc.budget.max_avg_optical == pytest.approx(0.4)

    def test_mc_override_raises_sample_count(self):
        args = cli.build_parser().parse_args(["rate", "--quadrature", "mc", "--seed", "3"])
        sc = cli.apply_overrides(Scenario(), args)
        assert sc.quad.stochastic and sc.quad.order >= cli.MC_POINTS and sc.quad.seed == 3


class TestRate:
    def test_matches_library(self, capsys, tmp_path):
        code, out, _ = run(capsys, "rate", "--out", str(tmp_path))
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 1 and tuple(rows[0]) == tuple(CSV_COLUMNS)
        sc = Scenario()
        pb = sc.problem()
        q1, q2 = fixed_allocation(sc, pb)
        rep = rate_aggregate(pb.optical, q1, pb.phys1, pb.rf, q2, pb.phys2, pb.quad)
        assert float(rows[0]["rate_total"]) == rep.rate_total
        assert float(rows[0]["lower"]) == rep.lower_total
        assert (tmp_path / "rate.csv").read_text() == out
        doc = json.loads((tmp_path / "rate.json").read_text())
        assert (doc["q1_sq"], doc["q2_sq"]) == (q1, q2)

    def test_degenerate_row(self, capsys, write_scenario):
        code, out, _ = run(capsys, "rate", "--scenario", write_scenario(TINY))
        row = read_csv(out)[0]
        assert code == 0
        assert float(row["rate_total"]) == 0.0
        gap = (1 - 1 / np.log(2)) * (40e6 + 20e6)
        assert float(row["lower"]) == pytest.approx(gap, rel=1e-12)

    def test_mc_rerun_identical(self, capsys):
        first = run(capsys, "rate", "--quadrature", "mc", "--seed", "7")[1]
        second = run(capsys, "rate", "--quadrature", "mc", "--seed", "7")[1]
        other = run(capsys, "rate", "--quadrature", "mc", "--seed", "8")[1]
        assert first == second
        assert first != other


class TestExitCodes:
    def test_config_error(self, capsys, write_scenario):
        code, _, err = run(capsys, "rate", "--scenario",
                           write_scenario({"channel": {"lifi": {"distance": -2}}}))
        assert code == cli.EXIT_CONFIG
        assert "channel.lifi.distance" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "rate", "--scenario", str(tmp_path / "nope.json"))
        assert code == cli.EXIT_CONFIG

    def test_infeasible(self, capsys, write_scenario):
        sc = write_scenario({"constellations": {"optical": {"elec_cap": 0.01}}})
        code, _, err = run(capsys, "optimize", "--scenario", sc)
        assert code == cli.EXIT_INFEASIBLE
        assert "constellations.optical" in err

    def test_nonconverged(self, capsys, write_scenario):
        sc = write_scenario({"solver": {"max_outer": 2, "outer_tol": 1e-9}})
        code, out, _ = run(capsys, "optimize", "--scenario", sc)
        assert code == cli.EXIT_NONCONVERGED
        assert json.loads(out)["converged"] is False

    def test_bad_range_is_config_error(self, capsys):
        code, _, _ = run(capsys, "sweep", "--axis", "P_T", "--range", "1:2")
        assert code == cli.EXIT_CONFIG


class TestOptimize:
    def test_trivial(self, capsys, write_scenario, tmp_path):
        code, out, _ = run(capsys, "optimize", "--scenario", write_scenario(TINY),
                           "--out", str(tmp_path))
        doc = json.loads(out)
        assert code == 0 and doc["iterations"] == 1 and doc["rate_total"] == 0.0
        assert (tmp_path / "trace.csv").read_text().startswith(cli.SCHEMA_LINE + "\n")

    def test_lower_is_budget_tight(self, capsys):
        code, out, _ = run(capsys, "optimize", "--objective", "lower")
        doc = json.loads(out)
        assert code == 0 and doc["objective"] == "lower_bound" and doc["budget_tight"]

    def test_exact_trace_reproducible(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(capsys, "optimize", "--seed", "2", "--out", str(a))[0] == 0
        assert run(capsys, "optimize", "--seed", "2", "--out", str(b))[0] == 0
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()


@pytest.fixture(scope="module")
def serial():
    return cli.run_sweep(Scenario(), "P_T", cli.parse_range("0.05:0.2:3", "P_T"), 1)


class TestSweep:
    def test_rows_per_point(self, serial):
        assert len(serial) == 3 * len(cli.METHODS)
        assert [r[3] for r in serial[:4]] == list(cli.METHODS)

    def test_jobs_keep_order(self, serial):
        parallel = cli.run_sweep(Scenario(), "P_T", cli.parse_range("0.05:0.2:3", "P_T"), 3)
        assert cli._csv(cli.SWEEP_COLUMNS, parallel) == cli._csv(cli.SWEEP_COLUMNS, serial)

    def test_rows_sandwiched(self, serial):
        for r in serial:
            rate, lower, upper, std = r[7], r[8], r[9], r[10]
            assert lower - 3 * std <= rate <= upper + 3 * std

    def test_one_point_matches_optimize(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "P_T", "--range", "0.1:0.1:1")
        rows = read_csv(out)
        assert code == 0
        doc = json.loads(run(capsys, "optimize")[1])
        best = rows[0]
        assert best["method"] == "optimized"
        assert float(best["q1_sq"]) == doc["q1_sq"]
        assert float(best["rate_total"]) == doc["rate_total"]

    def test_snr_axis(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "snr", "--range=-5:5:2")
        rows = read_csv(out)
        assert code == 0 and len(rows) == 8
        assert float(rows[0]["snr2"]) == pytest.approx(10 ** -0.5, rel=1e-9)


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert out.count("PASS") >= 7 and "FAIL" not in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lifiwifi.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep" in proc.stdout
