"""Tests for the sparse MILP container."""

import numpy as np
import pytest

from exceptions import IndexingError
from milp import INF, Family, MilpModel, ModelDims, VarType


def _dims():
    return ModelDims(
        variant="base", gen_ids=(), bus_ids=(), branch_ids=(), renewable_ids=(),
        storage_ids=(), vtl_ids=(), horizon=1, probabilities=(1.0,), interval_hours=1.0,
    )


@pytest.fixture
def tiny_model():
    """min 3x + 2y + 5b  s.t.  x + y >= 4,  x - 10b <= 0,  y <= 3."""
    m = MilpModel(_dims())
    x = m.add_var("x", (0,))
    y = m.add_var("y", (0,), ub=3.0)
    b = m.add_var("b", (0,), VarType.BINARY)
    m.add_constraint(Family.BALANCE, "cover", (0,), [(x, 1.0), (y, 1.0)], lb=4.0)
    m.add_constraint(Family.LIMIT, "link", (0,), [(x, 1.0), (b, -10.0)], ub=0.0)
    m.add_objective("energy", x, 3.0)
    m.add_objective("energy", y, 2.0)
    m.add_objective("fixed", b, 5.0)
    return m.freeze()


class TestMilpModel:
    """Test model construction and queries."""

    def test_counts(self, tiny_model):
        assert tiny_model.num_vars == 3
        assert tiny_model.num_constraints == 2
        assert tiny_model.binary_columns == [2]
        assert tiny_model.family_counts()[Family.LIMIT] == 1

    def test_lookup(self, tiny_model):
        assert tiny_model.var("y", (0,)) == 1
        assert tiny_model.has_var("b", (0,))
        with pytest.raises(IndexingError):
            tiny_model.var("z", (0,))

    def test_duplicate_variable(self):
        m = MilpModel(_dims())
        m.add_var("x", (1, 2))
        with pytest.raises(IndexingError, match="duplicate"):
            m.add_var("x", (1, 2))

    def test_unknown_column_in_constraint(self):
        m = MilpModel(_dims())
        with pytest.raises(IndexingError):
            m.add_constraint(Family.UC, "c", (0,), [(4, 1.0)], ub=1.0)

    def test_inverted_bounds(self):
        m = MilpModel(_dims())
        x = m.add_var("x", (0,))
        with pytest.raises(ValueError):
            m.add_constraint(Family.UC, "c", (0,), [(x, 1.0)], lb=2.0, ub=1.0)

    def test_frozen(self, tiny_model):
        with pytest.raises(RuntimeError):
            tiny_model.add_var("w", (0,))

    def test_binary_bounds_clamped(self):
        m = MilpModel(_dims())
        col = m.add_var("b", (0,), VarType.BINARY, lb=-5.0, ub=5.0)
        assert (m.variables[col].lb, m.variables[col].ub) == (0.0, 1.0)

    def test_repeated_terms_merge(self):
        m = MilpModel(_dims())
        x = m.add_var("x", (0,))
        m.add_constraint(Family.UC, "c", (0,), [(x, 1.0), (x, 2.0)], ub=9.0)
        assert m.constraints[0].terms == ((x, 3.0),)

    def test_arrays(self, tiny_model):
        arrays = tiny_model.arrays
        assert arrays.A.shape == (2, 3)
        assert list(arrays.c) == [3.0, 2.0, 5.0]
        assert list(arrays.row_lb) == [4.0, -INF]
        assert list(arrays.integrality) == [0, 0, 1]
        assert arrays.ub[1] == 3.0

    def test_objective_vector_subset(self, tiny_model):
        assert list(tiny_model.objective_vector(["fixed"])) == [0.0, 0.0, 5.0]

    def test_sense(self, tiny_model):
        assert tiny_model.constraints[0].sense == ">="
        assert tiny_model.constraints[1].sense == "<="


class TestDerivedModels:
    """Test filtered and fixed copies."""

    def test_without_families(self, tiny_model):
        relaxed = tiny_model.without_families([Family.LIMIT])

        assert relaxed.num_constraints == 1
        assert relaxed.constraints[0].row == 0
        assert tiny_model.num_constraints == 2

    def test_with_fixed(self, tiny_model):
        fixed = tiny_model.with_fixed({2: 1.0}, relax_integrality=True)

        assert fixed.arrays.lb[2] == 1.0 and fixed.arrays.ub[2] == 1.0
        assert not np.any(fixed.arrays.integrality)
        assert fixed.binary_columns == []
        # Original untouched
        assert tiny_model.arrays.ub[2] == 1.0 and tiny_model.arrays.lb[2] == 0.0
        assert tiny_model.binary_columns == [2]

    def test_with_fixed_keeps_integrality(self, tiny_model):
        fixed = tiny_model.with_fixed({0: 2.0})
        assert list(fixed.arrays.integrality) == [0, 0, 1]
        assert fixed.arrays.lb[0] == 2.0

    def test_dump(self, tiny_model):
        lines = tiny_model.dump().splitlines()

        assert len(lines) == 2
        assert lines[0].startswith("BALANCE")
        assert "cover[0]" in lines[0]
        assert ">= 4" in lines[0]
        assert "-10 b[0]" in lines[1]

    def test_repr(self, tiny_model):
        assert "binaries=1" in repr(tiny_model)
