"""Tests for model construction, solution handling and independent checks."""

import numpy as np
import pytest

from builder import (
    Solution,
    build_model,
    check_solution_feasibility,
    evaluate_objective,
    objective_breakdown,
    scenario_weights,
)
from cases import single_bus, storage_pair
from exceptions import DimensionMismatch, ScenarioCaseMismatch, SchemaError
from milp import Family
from models import ThermalGen
from scenarios import ScenarioSet
from variants import apply_variant


def _committed_vector(model, output_mw):
    """Every unit on from the first interval, producing ``output_mw``."""
    x = np.zeros(model.num_vars)
    x[model.block("u")] = 1.0
    x[model.block("v")[:, 0]] = 1.0
    x[model.block("p")] = output_mw
    return x


class TestBuildModel:
    """Test the extensive-form structure."""

    def test_storage_pair_vtl_counts(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "vtl"), storage_pair.scenarios)
        counts = model.family_counts()

        assert model.num_vars == 64
        assert len(model.binary_columns) == 20
        assert counts[Family.UC] == 2
        assert counts[Family.LIMIT] == 12
        assert counts[Family.FLOW] == 4
        assert counts[Family.CURT] == 4
        assert counts[Family.BALANCE] == 8
        assert counts[Family.REF] == 4
        assert counts[Family.SOC] == 40
        assert counts[Family.VTL] == 8
        assert Family.RAMP not in counts

    def test_single_bus_variable_counts(self):
        bundled = single_bus(horizon=2)
        model = build_model(apply_variant(bundled.case, "base"), bundled.scenarios)

        assert model.variable_counts() == {"u": 2, "v": 2, "p": 2, "theta": 2}
        assert model.families() == {Family.UC, Family.LIMIT, Family.BALANCE, Family.REF}

    def test_base_has_no_storage(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "base"), storage_pair.scenarios)

        assert model.num_vars == 24
        assert len(model.binary_columns) == 4
        assert model.families() == {Family.UC, Family.LIMIT, Family.FLOW, Family.CURT, Family.BALANCE, Family.REF}
        assert model.block("p_ch").shape == (2, 0, 2)

    def test_pt_adds_candidate_flows(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "pt"), storage_pair.scenarios)
        assert model.block("flow").shape == (2, 2, 2)
        assert model.dims.branch_ids == ("L12", "PT12")

    def test_bess_has_no_pair_rows(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "bess"), storage_pair.scenarios)
        assert Family.VTL not in model.families()
        assert model.family_counts()[Family.SOC] == 40

    def test_vtl_rows_scale_with_horizon_and_scenarios(self):
        bundled = storage_pair(horizon=24)
        scen = bundled.scenario_set(count=3, seed=1)
        model = build_model(apply_variant(bundled.case, "vtl"), scen)

        assert model.family_counts()[Family.VTL] == 144

    def test_first_stage_shared_across_scenarios(self, three_bus):
        model = build_model(apply_variant(three_bus.case, "base"), three_bus.scenarios)

        assert model.block("u").shape == (2, 6)
        assert model.block("p").shape == (2, 2, 6)
        assert model.has_var("u", ("G1", 0))
        assert not model.has_var("u", ("G1", 0, 0))

    def test_ramp_rows(self, toy_case, toy_scenarios):
        model = build_model(apply_variant(toy_case, "base"), toy_scenarios)
        ramps = model.constraints_in(Family.RAMP)

        # G2 starts offline: no first-interval row
        assert len(ramps) == 6
        assert {c.index[1] for c in ramps} == {1, 2, 3}

    def test_first_interval_ramp_for_committed_unit(self, case_factory):
        gen = ThermalGen("g1", "a", 10.0, 150.0, 20.0, ramp_mw_per_interval=50.0,
                         initial_status=True, initial_output_mw=40.0)
        case = case_factory(thermal_gens=(gen,))
        scen = ScenarioSet((1.0,), ({"w1": (30.0, 40.0, 50.0)},))
        model = build_model(apply_variant(case, "base"), scen)
        first = next(c for c in model.constraints_in(Family.RAMP) if c.index[1] == 0)

        assert (first.lb, first.ub) == (-10.0, 90.0)

    def test_startup_row_uses_initial_status(self, toy_case, toy_scenarios):
        model = build_model(apply_variant(toy_case, "base"), toy_scenarios)
        rows = {c.index: c for c in model.constraints_in(Family.UC)}

        assert rows[("G1", 0)].lb == -1.0
        assert rows[("G2", 0)].lb == 0.0

    def test_objective_weights(self, three_bus):
        scen = three_bus.scenarios.with_probabilities((0.25, 0.75))
        model = build_model(apply_variant(three_bus.case, "base"), scen)
        p = model.block("p")

        assert model.arrays.c[p[0, 0, 0]] == pytest.approx(0.25 * 10.0)
        assert model.arrays.c[p[1, 1, 0]] == pytest.approx(0.75 * 30.0)
        assert model.arrays.c[model.block("u")[1, 0]] == 100.0

    def test_balance_rhs_nets_out_renewables(self, three_bus):
        model = build_model(apply_variant(three_bus.case, "base"), three_bus.scenarios)
        windy = model.constraints[model.balance_rows[("3", 0, 1)]]
        calm = model.constraints[model.balance_rows[("3", 0, 0)]]

        assert windy.lb == windy.ub == 20.0
        assert calm.lb == 100.0

    def test_scenario_mismatch(self, three_bus):
        with pytest.raises(ScenarioCaseMismatch):
            build_model(apply_variant(three_bus.case, "base"), ScenarioSet((1.0,), ({},)))

    def test_probabilities_rescaled(self, three_bus):
        scen = three_bus.scenarios.with_probabilities((1.0, 1.0))
        model = build_model(apply_variant(three_bus.case, "base"), scen)
        assert model.dims.probabilities == (0.5, 0.5)

    def test_probabilities_kept_without_normalization(self, three_bus):
        scen = three_bus.scenarios.with_probabilities((1.0, 1.0))
        model = build_model(apply_variant(three_bus.case, "base"), scen, normalize_probabilities=False)
        assert model.dims.probabilities == (1.0, 1.0)

    def test_scenario_weights(self):
        scen = ScenarioSet((2.0, 6.0), ({}, {}))
        assert list(scenario_weights(scen)) == [0.25, 0.75]


class TestSolutionAndObjective:
    """Test reading vectors back and recomputing the objective."""

    @pytest.fixture
    def costly_single_bus(self):
        bundled = single_bus(no_load=50.0, startup=200.0)
        eff = apply_variant(bundled.case, "base")
        return eff, bundled.scenarios, build_model(eff, bundled.scenarios)

    def test_hand_built_solution(self, costly_single_bus):
        eff, scen, model = costly_single_bus
        sol = Solution.from_vector(model, _committed_vector(model, 100.0))

        assert sol.objective == pytest.approx(25400.0)
        assert sol.breakdown.startup == 200.0
        assert sol.breakdown.no_load == 1200.0
        assert evaluate_objective(sol, eff, scen) == pytest.approx(25400.0)
        assert check_solution_feasibility(sol, model).passed

    def test_breakdown_terms(self, costly_single_bus):
        eff, scen, model = costly_single_bus
        sol = Solution.from_vector(model, _committed_vector(model, 100.0))
        breakdown = objective_breakdown(sol, eff, scen)

        assert breakdown.weighted_energy == pytest.approx(24000.0)
        assert breakdown.curtailment_penalty == 0.0

    def test_infeasible_point_is_flagged(self, costly_single_bus):
        _, _, model = costly_single_bus
        sol = Solution.from_vector(model, _committed_vector(model, 90.0))
        report = check_solution_feasibility(sol, model)

        assert not report.passed
        assert report.max_violation["BALANCE"] == pytest.approx(10.0)
        assert "BALANCE" in report.failed_families()
        assert str(report).startswith("FAIL")

    def test_fractional_binary_is_flagged(self, costly_single_bus):
        _, _, model = costly_single_bus
        x = _committed_vector(model, 100.0)
        x[model.block("u")[0, 5]] = 0.7
        sol = Solution.from_vector(model, x, polish=False)

        assert check_solution_feasibility(sol, model).max_violation["INTEGRALITY"] == pytest.approx(0.3)

    def test_dimension_mismatch(self, costly_single_bus, three_bus):
        _, _, model = costly_single_bus
        with pytest.raises(DimensionMismatch):
            Solution.from_vector(model, np.zeros(model.num_vars + 1))

        sol = Solution.from_vector(model, _committed_vector(model, 100.0))
        other = apply_variant(three_bus.case, "base")
        with pytest.raises(DimensionMismatch):
            evaluate_objective(sol, other, three_bus.scenarios)

    def test_feasibility_tolerance_must_be_positive(self, costly_single_bus):
        _, _, model = costly_single_bus
        sol = Solution.from_vector(model, _committed_vector(model, 100.0))
        with pytest.raises(ValueError):
            check_solution_feasibility(sol, model, tol=0.0)

    def test_empty_solution(self, costly_single_bus):
        _, _, model = costly_single_bus
        sol = Solution.empty(model, "infeasible", "no point")

        assert not sol.is_feasible
        assert sol.commitment.shape == (1, 24)
        assert sol.to_dict()["objective"] is None

    def test_serialization_round_trip(self, costly_single_bus):
        _, _, model = costly_single_bus
        sol = Solution.from_vector(model, _committed_vector(model, 100.0))
        restored = Solution.from_dict(sol.to_dict())

        assert restored.objective == sol.objective
        assert restored.gen_ids == ("G1",)
        assert np.array_equal(restored.generation, sol.generation)
        assert restored.charge.shape == (1, 0, 24)

    def test_deserialization_rejects_bad_shape(self, costly_single_bus):
        _, _, model = costly_single_bus
        data = Solution.from_vector(model, _committed_vector(model, 100.0)).to_dict()
        data["commitment"] = [[1.0, 1.0]]
        with pytest.raises(SchemaError, match="shape"):
            Solution.from_dict(data)

    def test_deserialization_requires_renewable_kinds(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "base"), storage_pair.scenarios)
        data = Solution.from_vector(model, np.zeros(model.num_vars)).to_dict()
        del data["ids"]["renewable_kinds"]
        with pytest.raises(SchemaError, match="renewable_kinds"):
            Solution.from_dict(data)

    def test_first_stage_assignment_fits_larger_model(self, three_bus):
        eff = apply_variant(three_bus.case, "base")
        single = build_model(eff, three_bus.scenarios.subset([0]))
        full = build_model(eff, three_bus.scenarios)
        x = np.zeros(single.num_vars)
        x[single.block("u")] = 1.0
        sol = Solution.from_vector(single, x, polish=False)
        assignment = sol.first_stage_assignment(full)

        assert set(assignment) == set(full.block("u").ravel()) | set(full.block("v").ravel())
        assert all(assignment[int(c)] == 1.0 for c in full.block("u").ravel())
        with pytest.raises(DimensionMismatch):
            sol.first_stage_assignment(build_model(apply_variant(storage_pair().case, "base"),
                                                   storage_pair().scenarios))

    def test_polish_recomputes_flows_and_energy(self, storage_pair):
        model = build_model(apply_variant(storage_pair.case, "vtl"), storage_pair.scenarios)
        x = np.zeros(model.num_vars)
        x[model.block("theta")[0, 1, 0]] = -0.08  # bus 2 angle, scenario 0, t = 0
        x[model.block("p_ch")[0, 0, 0]] = 20.0
        x[model.block("flow")] = 12345.0
        sol = Solution.from_vector(model, x)

        assert sol.flow[0, 0, 0] == pytest.approx(80.0)
        assert sol.energy[0, 0, 0] == pytest.approx(19.0)
        assert sol.energy[0, 0, 1] == pytest.approx(19.0)
