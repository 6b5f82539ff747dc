"""Rate-fitting, report plumbing, and CLI tests."""

import json
import math
import os

import pytest

from besov_ks import cli
from besov_ks.experiments import (
    ExperimentSpec,
    RateReport,
    fit_loglog,
    run_scenario,
    write_report,
)


class TestFitLoglog:
    def test_exact_slope_one(self):
        slope, intercept, resid = fit_loglog([(1, 2), (2, 4), (4, 8)])
        assert slope == pytest.approx(1.0, abs=1e-12)
        assert intercept == pytest.approx(math.log(2.0), abs=1e-12)
        assert resid <= 1e-12

    def test_exact_slope_two(self):
        slope, _, resid = fit_loglog([(t, t * t) for t in (0.1, 0.2, 0.4)])
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert resid <= 1e-12

    def test_perturbed_power_law(self):
        pts = [(t, t * (1.0 + s * 0.01)) for t, s in
               zip((0.1, 0.2, 0.4, 0.8), (1, -1, 1, -1))]
        slope, _, _ = fit_loglog(pts)
        assert abs(slope - 1.0) <= 0.03

    def test_rejections(self):
        with pytest.raises(ValueError):
            fit_loglog([(1, 1), (2, 2)])
        with pytest.raises(ValueError):
            fit_loglog([(1, 1), (2, -2), (4, 4)])
        with pytest.raises(ValueError):
            fit_loglog([(1, 1), (1, 2), (2, 4)])


class TestExperimentSpec:
    def test_rejects_inadmissible(self):
        with pytest.raises(ValueError):
            ExperimentSpec(scenario="E1", s=1.0)
        with pytest.raises(ValueError):
            ExperimentSpec(scenario="E1", s=1.5, r=2.0)

    def test_auto_grid_selection(self):
        spec = ExperimentSpec(scenario="E1")
        sizes = {n: spec.grid_for_n(n).points_per_axis for n in spec.n_range()}
        assert sizes == {3: 4096, 4: 4096, 5: 8192, 6: 16384, 7: 32768}
        for n in spec.n_range():
            g = spec.grid_for_n(n)
            carrier = (17.0 / 12.0) * 2.0**n
            assert 2.0 * (carrier + 0.5) + 1.0 <= 0.5 * g.kmax

    def test_fixed_grid_override(self):
        spec = ExperimentSpec(scenario="E1", grid_points=4096)
        assert spec.grid_for_n(7).points_per_axis == 4096

    def test_auto_dt_resolves_advection(self):
        spec = ExperimentSpec(scenario="E1")
        for n in (3, 7):
            g = spec.grid_for_n(n)
            assert spec.dt_for(g) <= 0.5 / g.kmax

    def test_config_hash(self):
        a = ExperimentSpec(scenario="E1")
        b = ExperimentSpec(scenario="E1")
        c = ExperimentSpec(scenario="E1", n_max=6)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()


class TestRateReport:
    def test_fit_kinds(self):
        rep = RateReport("X")
        rep.add_fit("a", 1.05, 0.0, 0.0, target=1.0, tol=0.1, kind="two_sided")
        rep.add_fit("b", 0.5, 0.0, 0.0, target=1.0, tol=0.1, kind="at_most")
        rep.add_fit("c", 0.5, 0.0, 0.0, target=1.0, tol=0.1, kind="at_least")
        assert rep.fits["a"]["passed"] and rep.fits["b"]["passed"]
        assert not rep.fits["c"]["passed"]
        assert not rep.passed
        with pytest.raises(ValueError):
            rep.add_fit("d", 1.0, 0.0, 0.0, target=1.0, tol=0.1, kind="between")

    def test_every_flag_carries_target_and_tolerance(self):
        rep = RateReport("X")
        rep.add_fit("a", 1.0, 0.0, 0.0, target=1.0, tol=0.1, kind="two_sided")
        assert {"target", "tol", "kind", "passed"} <= set(rep.fits["a"])

    def test_row_filter(self):
        rep = RateReport("X")
        rep.add_row(3, 0.015625, 0.1, "D_Bs", 1.0)
        rep.add_row(4, 0.00390625, 0.1, "D_Bs", 2.0)
        rep.add_row(3, 0.015625, 0.1, "other", 3.0)
        got = rep.values("D_Bs", n=3)
        assert len(got) == 1 and got[0]["value"] == 1.0


class TestWriteReport:
    def test_empty_table(self, tmp_path):
        rep = RateReport("E9")
        csv_path, json_path = write_report(rep, str(tmp_path))
        assert open(csv_path).read() == "scenario,n,epsilon,t,norm,value\n"
        doc = json.load(open(json_path))
        assert doc["fits"] == {} and doc["passed"] is True

    def test_one_row_17_digits(self, tmp_path):
        rep = RateReport("E9")
        rep.add_row(3, 2.0**-6, 0.1, "D_Bs", 1.0 / 3.0)
        csv_path, _ = write_report(rep, str(tmp_path))
        line = open(csv_path).read().splitlines()[1]
        assert line == "E9,3,0.015625,0.10000000000000001,D_Bs,0.33333333333333331"

    def test_rerun_byte_identical(self, tmp_path):
        spec = ExperimentSpec(scenario="E1", n_max=5)
        blobs = []
        for sub in ("a", "b"):
            rep = run_scenario(spec)
            csv_path, json_path = write_report(rep, str(tmp_path / sub))
            blobs.append(open(csv_path, "rb").read() + open(json_path, "rb").read())
        assert blobs[0] == blobs[1]

    def test_io_error_carries_path(self, tmp_path):
        target = tmp_path / "blocked"
        target.write_text("")
        with pytest.raises(OSError, match="blocked"):
            write_report(RateReport("E9"), str(target))


class TestScenarioPlumbing:
    def test_unknown_scenario(self):
        spec = ExperimentSpec(scenario="E1")
        spec.scenario = "E9"
        with pytest.raises(ValueError):
            run_scenario(spec)

    def test_e1_report_shape(self):
        spec = ExperimentSpec(scenario="E1", n_max=5)
        rep = run_scenario(spec)
        assert rep.scenario == "E1"
        assert len(rep.rows) == 3 * 3  # three offsets, n = 3..5
        assert "config_hash" in rep.meta
        for entry in rep.fits.values():
            assert {"slope", "target", "tol", "passed"} <= set(entry)

    def test_critical_branch_e1(self):
        spec = ExperimentSpec(scenario="E1", s=1.5, r=1.0, n_max=5)
        rep = run_scenario(spec)
        assert rep.passed

    def test_d1_only_guard(self):
        spec = ExperimentSpec(scenario="E3", d=2, s=2.5, n_min=3, n_max=4,
                              grid_points=256, half_period=2.0 * math.pi)
        with pytest.raises(ValueError):
            run_scenario(spec)


class TestCli:
    def test_validate(self, capsys):
        assert cli.main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out

    def test_run_e1(self, tmp_path, capsys):
        rc = cli.main(["run", "E1", "--n-max", "5", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "E1.csv").exists()
        assert (tmp_path / "E1.json").exists()
        assert "E1: PASS" in capsys.readouterr().out

    def test_run_d2_smoke_e1(self, tmp_path):
        rc = cli.main(["run", "E1", "--d", "2", "--out", str(tmp_path)])
        assert rc == 0
        doc = json.load(open(tmp_path / "E1.json"))
        assert doc["meta"]["d"] == 2

    def test_d2_rejects_rate_scenarios(self, tmp_path):
        assert cli.main(["run", "E5", "--d", "2", "--out", str(tmp_path)]) == 2

    def test_config_file_and_flag_override(self, tmp_path, capsys):
        conf = tmp_path / "run.toml"
        conf.write_text('n_max = 4\nt_grid = "0.05,0.1"\n')
        rc = cli.main(["run", "E1", "--config", str(conf), "--n-max", "5",
                       "--out", str(tmp_path)])
        assert rc == 0
        doc = json.load(open(tmp_path / "E1.json"))
        assert doc["meta"]["n_range"] == [3, 5]  # flag beats file
        assert doc["meta"]["t_grid"] == [0.05, 0.1]
