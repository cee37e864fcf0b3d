import dataclasses

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import harness
from analysis import count_monotonicity_violations
from exceptions import IrsDesignError, OptimizerError
from harness import (
    compare_schemes,
    design_from_file,
    design_scenario,
    design_to_file,
    evaluate,
    sweep_power_vs_rate,
    trace_frame,
    write_report,
)
from scenario import with_overrides


@pytest.fixture(scope="module")
def designed(desk_scenario):
    design, ctx, channels = design_scenario(desk_scenario)
    return design, channels


class TestEvaluate:

    def test_records(self, desk_scenario, designed):
        design, channels = designed
        report = evaluate(design, desk_scenario, trials=300, channels=channels)
        assert list(report.records.columns) == ["trial", "dx_m", "dy_m", "dz_m", "error_norm_m",
                                                "exact_rate_bps_hz", "model_rate_bps_hz", "rate_bps_hz"]
        assert len(report.records) == 300
        assert report.records["error_norm_m"].max() <= desk_scenario.upsilon_m
        assert_array_equal(report.rates, report.records["model_rate_bps_hz"])
        assert report.scheme == "robust"
        assert report.power_w == design.power

    def test_independent_of_worker_count(self, desk_scenario, designed):
        design, channels = designed
        one = evaluate(design, desk_scenario, trials=2500, channels=channels, workers=1)
        three = evaluate(design, desk_scenario, trials=2500, channels=channels, workers=3)
        pd.testing.assert_frame_equal(one.records, three.records)

    def test_exact_mode(self, desk_scenario, designed):
        design, channels = designed
        report = evaluate(design, desk_scenario, trials=50, mode="exact", channels=channels)
        assert_array_equal(report.rates, report.records["exact_rate_bps_hz"])

    def test_no_uncertainty_gives_identical_rates(self, desk_scenario, designed):
        design, channels = designed
        report = evaluate(design, with_overrides(desk_scenario, upsilon_m=0.0), trials=20, channels=channels)
        assert report.summary["spread"] == 0.0
        assert report.outage in (0.0, 1.0)
        assert_allclose(report.records["exact_rate_bps_hz"], report.records["model_rate_bps_hz"], rtol=1e-12)

    def test_csv_is_reproducible(self, desk_scenario, designed, tmp_path):
        design, channels = designed
        paths = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            write_report(evaluate(design, desk_scenario, trials=200, channels=channels), str(path))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert (tmp_path / "a.csv.summary.txt").exists()

    def test_cdf(self, desk_scenario, designed):
        design, channels = designed
        cdf = evaluate(design, desk_scenario, trials=100, channels=channels).cdf()
        assert np.all(np.diff(cdf["cdf"]) >= 0)
        assert cdf["cdf"].iloc[-1] == 1.0

    def test_invalid_trials(self, desk_scenario, designed):
        with pytest.raises(IrsDesignError):
            evaluate(designed[0], desk_scenario, trials=-1)

    @pytest.mark.parametrize("overrides", [{"trials": 0}, {"workers": 0}])
    def test_zero_is_not_a_default(self, desk_scenario, designed, overrides):
        with pytest.raises(IrsDesignError):
            evaluate(designed[0], desk_scenario, channels=designed[1], **overrides)

    def test_rng_seed_only_changes_the_draws(self, desk_scenario, designed):
        design, channels = designed
        one = evaluate(design, desk_scenario, trials=100, channels=channels, rng_seed=123)
        two = evaluate(design, desk_scenario, trials=100, channels=channels, rng_seed=np.random.SeedSequence(123))
        other = evaluate(design, desk_scenario, trials=100, channels=channels)
        pd.testing.assert_frame_equal(one.records, two.records)
        assert not np.array_equal(one.records["dx_m"], other.records["dx_m"])


class TestCompareSchemes:

    def test_equal_power_and_draws(self, desk_scenario, designed):
        robust, nonrobust = compare_schemes(designed[0], desk_scenario, trials=200)
        assert nonrobust.scheme == "nonrobust"
        assert_allclose(nonrobust.power_w, robust.power_w)
        assert_array_equal(robust.records["dx_m"], nonrobust.records["dx_m"])

    def test_rng_seed_reaches_both_schemes(self, desk_scenario, designed):
        robust, nonrobust = compare_schemes(designed[0], desk_scenario, trials=100, rng_seed=9)
        expected = evaluate(designed[0], desk_scenario, trials=100, channels=designed[1], rng_seed=9)
        assert_array_equal(robust.records["dx_m"], expected.records["dx_m"])
        assert_array_equal(nonrobust.records["dx_m"], expected.records["dx_m"])


class TestDesignFiles:

    def test_round_trip(self, desk_scenario, designed, tmp_path):
        design = designed[0]
        path = tmp_path / "design.json"
        design_to_file(design, desk_scenario, str(path))
        loaded, scen = design_from_file(str(path))
        assert scen == desk_scenario
        assert_allclose(loaded.w, design.w)
        assert_allclose(loaded.xi.xi, design.xi.xi)
        assert_allclose(loaded.power, design.power)
        pd.testing.assert_frame_equal(trace_frame(loaded.trace), trace_frame(design.trace))

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "irs-design/0"}')
        with pytest.raises(IrsDesignError):
            design_from_file(str(path))

    def test_trace_frame(self, designed):
        df = trace_frame(designed[0].trace)
        assert list(df.columns[:3]) == ["iteration", "power_w", "power_dbm"]
        assert len(df) == len(designed[0].trace)


class TestSweep:

    def test_failed_points_are_kept(self, desk_scenario, designed, monkeypatch):
        design = designed[0]

        def fake_design(scen):
            if scen.target_rate > 5:
                raise OptimizerError("no feasible start", 0)
            return dataclasses.replace(design, power=design.power * scen.target_rate), None, None

        monkeypatch.setattr(harness, "design_scenario", fake_design)
        table = sweep_power_vs_rate(desk_scenario, [2.0, 4.0, 6.0], [1.0], [16], workers=2)
        assert list(table["target_rate_bps_hz"]) == [2.0, 4.0, 6.0]
        assert list(table["status"]) == ["ok", "ok", "failed"]
        assert "no feasible start" in table["reason"].iloc[2]
        assert np.isnan(table["power_w"].iloc[2])
        assert count_monotonicity_violations(table) == 0

    def test_empty_grid(self, desk_scenario):
        with pytest.raises(IrsDesignError):
            sweep_power_vs_rate(desk_scenario, [], [1.0], [16])


@pytest.mark.slow
class TestAcceptance:

    def test_worst_case_guarantee(self, desk_scenario, designed):
        design, channels = designed
        report = evaluate(design, desk_scenario, trials=10000, mode="model", channels=channels, workers=4)
        assert report.outage <= 0.01
        assert report.summary["outage_relaxed"] <= 0.001

    def test_robust_beats_nonrobust(self, desk_scenario, designed):
        robust, nonrobust = compare_schemes(designed[0], desk_scenario, trials=10000, mode="model", workers=4)
        assert nonrobust.outage - robust.outage >= 0.30
        assert nonrobust.summary["spread"] >= 3 * robust.summary["spread"]

    def test_power_trends(self, desk_scenario):
        table = sweep_power_vs_rate(desk_scenario, [2.0, 4.0, 6.0], [1.0, 2.0], [16, 36], workers=4)
        assert (table["status"] != "failed").all()
        assert count_monotonicity_violations(table) <= 1
