"""Tests for post-solve metrics, comparisons and stochastic diagnostics."""

import dataclasses
from unittest.mock import patch

import numpy as np
import pytest

import cases
from config import APP_CONFIG
from exceptions import BaselineMissing, DimensionMismatch, MixedProvenance
from gateway import LmpSurface, solve_case
from metrics import (
    MetricsReport,
    branch_loading_rows,
    build_metrics,
    commitment_differences,
    compare_variants,
    congestion_count,
    congestion_line_hours,
    congestion_tolerance,
    curtailment_totals,
    derived_claims,
    load_payment,
    stochastic_diagnostics,
)
from solvers import ScipyHighsBackend, SolverOptions
from variants import apply_variant


@pytest.fixture(scope="module")
def pair_runs():
    """All four variants of the storage pair case, solved once."""
    bundled = cases.storage_pair()
    opts = SolverOptions(relative_mip_gap=1e-9, time_limit_seconds=60, threads=1)
    backend = ScipyHighsBackend()
    runs = {}
    for variant in ("base", "pt", "bess", "vtl"):
        eff = apply_variant(bundled.case, variant)
        _, sol = solve_case(eff, bundled.scenarios, opts, backend)
        runs[variant] = (eff, sol)
    return bundled, runs


@pytest.fixture(scope="module")
def pair_reports(pair_runs):
    bundled, runs = pair_runs
    return [build_metrics(sol, eff, bundled.scenarios, case_digest="abc") for eff, sol in runs.values()]


@pytest.mark.integration
class TestPerVariantMetrics:
    """Test congestion, curtailment and payments on solved cases."""

    def test_congestion_counts(self, pair_runs):
        _, runs = pair_runs
        counts = {v: congestion_count(sol, eff, 1e-4) for v, (eff, sol) in runs.items()}

        assert counts["base"] == (1, 0)
        assert counts["pt"] == (0, 0)
        assert counts["bess"] == (1, 0)
        assert counts["vtl"] == (1, 0)

    def test_line_hours(self, pair_runs):
        _, runs = pair_runs
        eff, sol = runs["base"]
        assert congestion_line_hours(sol, eff, 1e-4) == (1, 0)

    @pytest.mark.parametrize("variant,curtailed", [("base", 70.0), ("pt", 50.0), ("bess", 20.0), ("vtl", 20.0)])
    def test_curtailment(self, pair_runs, variant, curtailed):
        bundled, runs = pair_runs
        totals = curtailment_totals(runs[variant][1], bundled.scenarios)

        assert totals[0]["wind_mwh"] == pytest.approx(curtailed, abs=1e-6)
        assert totals[0]["solar_mwh"] == 0.0
        assert totals[1]["wind_mwh"] == pytest.approx(0.0, abs=1e-6)

    def test_curtailment_scenario_mismatch(self, pair_runs, three_bus):
        _, runs = pair_runs
        with pytest.raises(DimensionMismatch):
            curtailment_totals(runs["base"][1], three_bus.scenarios.subset([0]))

    def test_epsilon_range(self, pair_runs):
        _, runs = pair_runs
        eff, sol = runs["base"]
        with pytest.raises(ValueError):
            congestion_count(sol, eff, 0.0)
        with pytest.raises(ValueError):
            congestion_count(sol, eff, 0.05)

    def test_branch_loading_rows(self, pair_runs):
        _, runs = pair_runs
        eff, sol = runs["base"]
        rows = branch_loading_rows(sol, eff)

        assert len(rows) == 4
        assert rows[0] == {"variant": "base", "scenario": 0, "branch": "L12", "hour": 0,
                           "loading_fraction": pytest.approx(1.0)}

    def test_report_for_infeasible_solution(self):
        bundled = cases.single_bus(horizon=2, p_max=50.0)
        eff = apply_variant(bundled.case, "base")
        _, sol = solve_case(eff, bundled.scenarios, SolverOptions(relative_mip_gap=1e-9), ScipyHighsBackend())
        report = build_metrics(sol, eff, bundled.scenarios)

        assert not report.available
        assert report.metric_values()["operational_cost"] is None

    def test_report_round_trip(self, pair_reports):
        report = pair_reports[0]
        restored = MetricsReport.from_dict(report.to_dict())

        assert restored.metric_values() == report.metric_values()
        assert restored.case_digest == "abc"


@pytest.mark.integration
class TestCongestionTolerance:
    """Test where the congestion epsilon comes from and how counts react to it."""

    @pytest.fixture
    def near_limit(self, two_bus):
        """The two-bus case declaring epsilon 0.01, its line loaded to 99.5 % of the limit."""
        case = dataclasses.replace(two_bus.case,
                                   options=dataclasses.replace(two_bus.case.options, congestion_epsilon=0.01))
        eff = apply_variant(case, "base")
        _, sol = solve_case(eff, two_bus.scenarios, SolverOptions(relative_mip_gap=1e-9), ScipyHighsBackend(),
                            with_prices=False)
        return eff, dataclasses.replace(sol, flow=np.asarray(sol.flow) * 0.995)

    def test_case_epsilon_is_used(self, near_limit, two_bus):
        eff, sol = near_limit
        with patch.object(APP_CONFIG, "congestion_epsilon", None):
            report = build_metrics(sol, eff, two_bus.scenarios)

        assert congestion_tolerance(eff.case) == 0.01
        assert report.congestion_epsilon == 0.01
        assert report.congestion_counts == (1,)

    def test_explicit_epsilon_wins(self, near_limit, two_bus):
        eff, sol = near_limit
        with patch.object(APP_CONFIG, "congestion_epsilon", None):
            report = build_metrics(sol, eff, two_bus.scenarios, eps=1e-4)

        assert report.congestion_counts == (0,)

    def test_environment_overrides_case(self, near_limit, two_bus):
        eff, sol = near_limit
        with patch.object(APP_CONFIG, "congestion_epsilon", 1e-4):
            report = build_metrics(sol, eff, two_bus.scenarios)

        assert report.congestion_epsilon == 1e-4
        assert report.congestion_counts == (0,)

    def test_counts_never_drop_as_epsilon_grows(self, near_limit, pair_runs):
        cases_to_check = [near_limit] + [pair_runs[1][v] for v in ("base", "pt", "bess", "vtl")]
        for eff, sol in cases_to_check:
            counts = [congestion_count(sol, eff, eps) for eps in (1e-4, 1e-3, 4e-3, 6e-3, 1e-2)]
            hours = [congestion_line_hours(sol, eff, eps) for eps in (1e-4, 1e-3, 4e-3, 6e-3, 1e-2)]
            for lower, higher in zip(counts, counts[1:]):
                assert all(a <= b for a, b in zip(lower, higher))
            for lower, higher in zip(hours, hours[1:]):
                assert all(a <= b for a, b in zip(lower, higher))


class TestLoadPayment:
    """Test demand-weighted price sums."""

    def test_two_bus(self, two_bus):
        lmp = LmpSurface(np.array([[[10.0, 10.0], [50.0, 50.0]]]), ("1", "2"), (1.0,))
        assert load_payment(lmp, two_bus.case, two_bus.scenarios) == pytest.approx(15000.0)

    def test_conventions(self, three_bus):
        lmp = LmpSurface(np.full((2, 3, 6), 30.0), ("1", "2", "3"), (0.5, 0.5))

        assert load_payment(lmp, three_bus.case, three_bus.scenarios, "expected") == pytest.approx(18000.0)
        assert load_payment(lmp, three_bus.case, three_bus.scenarios, "unweighted") == pytest.approx(36000.0)
        with pytest.raises(ValueError):
            load_payment(lmp, three_bus.case, three_bus.scenarios, "median")

    def test_shape_mismatch(self, three_bus):
        lmp = LmpSurface(np.zeros((2, 3, 4)), ("1", "2", "3"), (0.5, 0.5))
        with pytest.raises(DimensionMismatch):
            load_payment(lmp, three_bus.case, three_bus.scenarios)

    @pytest.mark.integration
    def test_from_solved_prices(self, pair_reports):
        base = pair_reports[0]
        assert base.load_payment["expected"] is not None
        assert base.payment == base.load_payment["expected"]

    @pytest.mark.integration
    def test_single_scenario_matches_deterministic_sum(self, two_bus, tight_options, highs):
        _, sol = solve_case(apply_variant(two_bus.case, "base"), two_bus.scenarios, tight_options, highs)
        lmp = LmpSurface(np.asarray(sol.lmp), sol.bus_ids, sol.probabilities)
        demand = np.array([two_bus.case.bus_demand(b) for b in sol.bus_ids])
        deterministic = float((demand * sol.lmp[0]).sum()) * two_bus.case.options.interval_hours

        assert deterministic == pytest.approx(15000.0)
        assert load_payment(lmp, two_bus.case, two_bus.scenarios, "expected") == pytest.approx(deterministic)
        assert load_payment(lmp, two_bus.case, two_bus.scenarios, "unweighted") == pytest.approx(deterministic)


@pytest.mark.integration
class TestComparison:
    """Test percent-of-baseline tables and headline claims."""

    def test_cost_percentages(self, pair_reports):
        table = compare_variants(pair_reports, "base")

        assert table.percent("base", "operational_cost") == pytest.approx(100.0)
        assert table.percent("pt", "operational_cost") == pytest.approx(100.0 * 18750.0 / 24250.0, rel=1e-6)
        assert table.percent("vtl", "operational_cost") == pytest.approx(100.0 * 10621.875 / 24250.0, rel=1e-6)

    def test_zero_baseline_is_absolute(self, pair_reports):
        table = compare_variants(pair_reports, "base")
        cell = table.cell("pt", "congestion_s1")

        assert cell.absolute
        assert cell.percent is None
        assert cell.value == 0.0

    def test_curtailment_percentage(self, pair_reports):
        table = compare_variants(pair_reports, "base")
        assert table.percent("bess", "curtailment_total_s0") == pytest.approx(100.0 * 20.0 / 70.0, rel=1e-6)

    def test_rows_are_long_format(self, pair_reports):
        table = compare_variants(pair_reports, "base")
        rows = table.rows()

        assert len(rows) == len(table.metrics) * 4
        assert set(rows[0]) == {"metric", "variant", "value", "percent_of_baseline", "absolute", "available"}

    def test_baseline_missing(self, pair_reports):
        with pytest.raises(BaselineMissing):
            compare_variants(pair_reports, "hvdc")

    def test_mixed_provenance(self, pair_reports):
        other = MetricsReport.from_dict({**pair_reports[1].to_dict(), "case_digest": "zzz"})
        with pytest.raises(MixedProvenance):
            compare_variants([pair_reports[0], other], "base")

    def test_derived_claims(self, pair_reports):
        claims = derived_claims(compare_variants(pair_reports, "base"))
        vtl_pct = 100.0 * 10621.875 / 24250.0
        pt_pct = 100.0 * 18750.0 / 24250.0

        assert claims["cost_reduction_pct"]["vtl"] == pytest.approx(100.0 - vtl_pct, rel=1e-6)
        assert claims["cost_advantage_points"]["pt"] == pytest.approx(pt_pct - vtl_pct, rel=1e-6)
        assert claims["cost_advantage_points"]["bess"] == pytest.approx(0.0, abs=1e-4)
        assert claims["congestion_relief_advantage"]["pt"]["per_scenario"] == [pytest.approx(-1.0), None]

    def test_claims_without_reference(self, pair_reports):
        claims = derived_claims(compare_variants(pair_reports[:2], "base"))
        assert "note" in claims


@pytest.mark.integration
class TestStochasticDiagnostics:
    """Test WS, RP, EEV and the derived VSS and EVPI."""

    @pytest.fixture(scope="class")
    def diagnostics(self):
        bundled = cases.stochastic_three_bus()
        opts = SolverOptions(relative_mip_gap=1e-9, time_limit_seconds=60, threads=1)
        return stochastic_diagnostics(bundled.case, bundled.scenarios, "base", opts, ScipyHighsBackend())

    def test_values(self, diagnostics):
        assert diagnostics.ws == pytest.approx(5100.0)
        assert diagnostics.rp == pytest.approx(11400.0)
        assert diagnostics.eev == pytest.approx(64800.0)
        assert diagnostics.vss == pytest.approx(53400.0)
        assert diagnostics.evpi == pytest.approx(6300.0)
        assert diagnostics.eev_feasible

    def test_ordering(self, diagnostics):
        assert diagnostics.ws <= diagnostics.rp <= diagnostics.eev

    def test_scenario_objectives(self, diagnostics):
        assert diagnostics.scenario_objectives == [pytest.approx(6000.0), pytest.approx(4200.0)]

    def test_commitment_differences(self, diagnostics):
        assert diagnostics.commitment_differences == [12, 0]

    def test_parallel_solves_agree(self, diagnostics):
        bundled = cases.stochastic_three_bus()
        opts = SolverOptions(relative_mip_gap=1e-9, time_limit_seconds=60, threads=1)
        parallel = stochastic_diagnostics(bundled.case, bundled.scenarios, "base", opts,
                                          ScipyHighsBackend(), max_workers=2)
        assert parallel.ws == pytest.approx(diagnostics.ws)

    def test_to_dict(self, diagnostics):
        data = diagnostics.to_dict()
        assert data["VSS"] == pytest.approx(53400.0)
        assert data["commitment_differences"] == [12, 0]

    def test_single_scenario_has_no_stochastic_value(self):
        bundled = cases.stochastic_three_bus()
        opts = SolverOptions(relative_mip_gap=1e-9, time_limit_seconds=60, threads=1)
        single = stochastic_diagnostics(bundled.case, bundled.scenarios.subset([0]), "base", opts,
                                        ScipyHighsBackend())

        assert single.rp == pytest.approx(6000.0)
        assert single.ws == pytest.approx(single.rp)
        assert single.eev == pytest.approx(single.rp)
        assert single.vss == pytest.approx(0.0, abs=1e-6)
        assert single.evpi == pytest.approx(0.0, abs=1e-6)


class TestCommitmentDifferences:
    """Test commitment comparison without solving."""

    def test_counts_and_shape_mismatch(self, pair_runs):
        _, runs = pair_runs
        sol = runs["base"][1]
        flipped = dataclasses.replace(sol, commitment=1.0 - np.rint(sol.commitment))
        wrong_shape = dataclasses.replace(sol, commitment=np.zeros((2, 6)))

        assert commitment_differences(sol, [sol, flipped]) == [0, sol.commitment.size]
        with pytest.raises(DimensionMismatch):
            commitment_differences(wrong_shape, [sol])
