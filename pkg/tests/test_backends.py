"""Tests for the solver backends and their agreement."""

import numpy as np
import pytest

import cases
from builder import build_model
from gateway import get_backend, solve_case, solve_milp
from milp import Family, MilpModel, ModelDims, VarType
from solvers import BACKEND_CLASSES, PyomoBackend, ScipyHighsBackend, SolveStatus, SolverOptions
from solvers.pyomo_backend import OPTION_NAMES
from variants import apply_variant


def _knapsack():
    """max 5a + 4b + 3c with 2a + 3b + c <= 4, binary; optimum a = c = 1 (value 8)."""
    dims = ModelDims(variant="base", gen_ids=(), bus_ids=(), branch_ids=(), renewable_ids=(),
                     storage_ids=(), vtl_ids=(), horizon=1, probabilities=(1.0,), interval_hours=1.0)
    m = MilpModel(dims)
    cols = [m.add_var(name, (0,), VarType.BINARY) for name in ("a", "b", "c")]
    m.add_constraint(Family.LIMIT, "weight", (0,), list(zip(cols, (2.0, 3.0, 1.0))), ub=4.0)
    for col, value in zip(cols, (5.0, 4.0, 3.0)):
        m.add_objective("value", col, -value)
    return m.freeze()


class TestSolverOptions:
    """Test option validation."""

    @pytest.mark.parametrize("kwargs", [
        {"relative_mip_gap": -1.0},
        {"time_limit_seconds": 0.0},
        {"threads": 0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SolverOptions(**kwargs)

    def test_registry(self):
        assert BACKEND_CLASSES == {"highs": ScipyHighsBackend, "pyomo": PyomoBackend}

    def test_option_names_cover_default_solver(self):
        assert set(OPTION_NAMES["appsi_highs"]) >= {"gap", "time"}


class TestScipyHighsBackend:
    """Test the scipy HiGHS backend on small models."""

    def test_knapsack(self, highs, tight_options):
        result = highs.solve_milp(_knapsack(), tight_options)

        assert result.status is SolveStatus.OPTIMAL
        assert result.objective == pytest.approx(-8.0)
        assert list(np.rint(result.x)) == [1.0, 0.0, 1.0]

    def test_lp_relaxation_has_duals(self, highs, tight_options):
        model = _knapsack().with_fixed({}, relax_integrality=True)
        result = highs.solve_lp(model, tight_options)

        assert result.status is SolveStatus.OPTIMAL
        assert result.row_duals is not None and len(result.row_duals) == 1
        assert result.objective <= -8.0 + 1e-9

    def test_available(self):
        assert ScipyHighsBackend.available()


@pytest.mark.integration
class TestPyomoBackend:
    """The Pyomo front-end must agree with the scipy backend."""

    def test_resolution(self, pyomo_highs):
        assert get_backend("pyomo:appsi_highs").label == "pyomo:appsi_highs"

    def test_knapsack(self, pyomo_highs, tight_options):
        result = pyomo_highs.solve_milp(_knapsack(), tight_options)
        assert result.objective == pytest.approx(-8.0)

    @pytest.mark.parametrize("variant", ["base", "pt", "bess", "vtl"])
    def test_objectives_agree(self, pyomo_highs, highs, tight_options, storage_pair, variant):
        model = build_model(apply_variant(storage_pair.case, variant), storage_pair.scenarios)

        ours = solve_milp(model, tight_options, pyomo_highs)
        reference = solve_milp(model, tight_options, highs)
        assert ours.objective == pytest.approx(reference.objective, rel=1e-6)

    def test_prices_agree(self, pyomo_highs, highs, tight_options):
        bundled = cases.two_bus_congested()
        eff = apply_variant(bundled.case, "base")
        _, ours = solve_case(eff, bundled.scenarios, tight_options, pyomo_highs)

        assert np.allclose(ours.lmp[:, 0, :], 10.0)
        assert np.allclose(ours.lmp[:, 1, :], 50.0)

    def test_infeasible(self, pyomo_highs, tight_options):
        bundled = cases.single_bus(horizon=2, p_max=50.0)
        model = build_model(apply_variant(bundled.case, "base"), bundled.scenarios)
        sol = solve_milp(model, tight_options, pyomo_highs)

        assert sol.status == "infeasible"
        assert sol.infeasible_family == "LIMIT"
