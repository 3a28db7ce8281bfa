"""
Sparse MILP container keyed by structured indices.

Variables and constraints carry a name plus an index tuple such as
``("g1", 3)`` or ``("b2", 3, 0)`` and every constraint is tagged with a
family. A model is frozen once built; filtered or re-bounded variants are
produced as copies.
"""

from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from exceptions import IndexingError

INF = float("inf")


class VarType(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Family(str, Enum):
    """Constraint family tags."""

    UC = "UC"
    RAMP = "RAMP"
    FLOW = "FLOW"
    LIMIT = "LIMIT"
    BALANCE = "BALANCE"
    CURT = "CURT"
    SOC = "SOC"
    VTL = "VTL"
    REF = "REF"


# Order in which infeasibility diagnosis drops families
FAMILY_ORDER = (
    Family.UC, Family.LIMIT, Family.RAMP, Family.FLOW, Family.CURT,
    Family.SOC, Family.VTL, Family.BALANCE, Family.REF,
)


@dataclass(frozen=True)
class Variable:
    name: str
    index: Tuple
    vtype: VarType
    lb: float
    ub: float
    column: int

    @property
    def label(self) -> str:
        return f"{self.name}[{','.join(str(i) for i in self.index)}]"


@dataclass(frozen=True)
class LinearConstraint:
    """lb <= sum(coef * x[col]) <= ub; equality when lb == ub."""

    family: Family
    name: str
    index: Tuple
    terms: Tuple[Tuple[int, float], ...]
    lb: float
    ub: float
    row: int

    @property
    def label(self) -> str:
        return f"{self.name}[{','.join(str(i) for i in self.index)}]"

    @property
    def sense(self) -> str:
        if self.lb == self.ub:
            return "=="
        if self.lb == -INF:
            return "<="
        if self.ub == INF:
            return ">="
        return "in"


@dataclass(frozen=True)
class ModelDims:
    """Index sets and the data needed to read a solution back."""

    variant: str
    gen_ids: Tuple[str, ...]
    bus_ids: Tuple[str, ...]
    branch_ids: Tuple[str, ...]
    renewable_ids: Tuple[str, ...]
    storage_ids: Tuple[str, ...]
    vtl_ids: Tuple[str, ...]
    horizon: int
    probabilities: Tuple[float, ...]
    interval_hours: float
    base_mva: float = 100.0
    renewable_kinds: Tuple[str, ...] = ()
    branch_from: Tuple[int, ...] = ()
    branch_to: Tuple[int, ...] = ()
    reactance_pu: Tuple[float, ...] = ()
    flow_limit_mw: Tuple[float, ...] = ()
    eta_charge: Tuple[float, ...] = ()
    eta_discharge: Tuple[float, ...] = ()
    initial_energy_mwh: Tuple[float, ...] = ()
    vtl_members: Tuple[Tuple[int, int], ...] = ()

    @property
    def scenario_count(self) -> int:
        return len(self.probabilities)


@dataclass(frozen=True)
class MilpArrays:
    """Matrix form: min c.x  s.t.  row_lb <= A x <= row_ub, lb <= x <= ub."""

    c: np.ndarray
    A: sparse.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray


class MilpModel:
    """Variables, tagged linear constraints and a linear objective split into named terms."""

    def __init__(self, dims: ModelDims):
        self.dims = dims
        self.variables: List[Variable] = []
        self.constraints: List[LinearConstraint] = []
        self.objective_terms: Dict[str, Dict[int, float]] = {}
        self.balance_rows: Dict[Tuple[str, int, int], int] = {}
        self.blocks: Dict[str, np.ndarray] = {}
        self._lookup: Dict[Tuple[str, Tuple], int] = {}
        self._frozen = False

    # Construction

    def _check_open(self) -> None:
        if self._frozen:
            raise RuntimeError("model is frozen")

    def add_var(self, name: str, index: Tuple, vtype: VarType = VarType.CONTINUOUS,
                lb: float = 0.0, ub: float = INF) -> int:
        self._check_open()
        key = (name, tuple(index))
        if key in self._lookup:
            raise IndexingError(f"duplicate variable {name}{list(index)}")
        if vtype is VarType.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        column = len(self.variables)
        self.variables.append(Variable(name, tuple(index), vtype, float(lb), float(ub), column))
        self._lookup[key] = column
        return column

    def register_block(self, name: str, columns: np.ndarray) -> None:
        """Record the array of columns holding variable ``name`` in solution order."""
        self._check_open()
        self.blocks[name] = np.asarray(columns, dtype=np.int64)

    def add_constraint(self, family: Family, name: str, index: Tuple,
                       terms: Iterable[Tuple[int, float]], lb: float = -INF, ub: float = INF) -> int:
        self._check_open()
        merged: Dict[int, float] = {}
        for column, coef in terms:
            if not 0 <= column < len(self.variables):
                raise IndexingError(f"constraint {name}{list(index)} references unknown column {column}")
            merged[column] = merged.get(column, 0.0) + float(coef)
        if lb > ub:
            raise ValueError(f"constraint {name}{list(index)} has lb {lb} > ub {ub}")
        row = len(self.constraints)
        con = LinearConstraint(Family(family), name, tuple(index), tuple(merged.items()), float(lb), float(ub), row)
        self.constraints.append(con)
        key = self._balance_key(con)
        if key is not None:
            self.balance_rows[key] = row
        return row

    def add_objective(self, term: str, column: int, coef: float) -> None:
        self._check_open()
        if not 0 <= column < len(self.variables):
            raise IndexingError(f"objective term {term} references unknown column {column}")
        bucket = self.objective_terms.setdefault(term, {})
        bucket[column] = bucket.get(column, 0.0) + float(coef)

    def freeze(self) -> "MilpModel":
        self._frozen = True
        return self

    # Queries

    def var(self, name: str, index: Tuple) -> int:
        try:
            return self._lookup[(name, tuple(index))]
        except KeyError:
            raise IndexingError(f"no variable {name}{list(index)}")

    def has_var(self, name: str, index: Tuple) -> bool:
        return (name, tuple(index)) in self._lookup

    def block(self, name: str) -> np.ndarray:
        if name not in self.blocks:
            raise IndexingError(f"no variable block {name!r}")
        return self.blocks[name]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def binary_columns(self) -> List[int]:
        return [v.column for v in self.variables if v.vtype is VarType.BINARY]

    def family_counts(self) -> Counter:
        return Counter(c.family for c in self.constraints)

    def variable_counts(self) -> Counter:
        return Counter(v.name for v in self.variables)

    def families(self) -> set:
        return set(self.family_counts())

    def constraints_in(self, family: Family) -> List[LinearConstraint]:
        return [c for c in self.constraints if c.family is Family(family)]

    def objective_vector(self, terms: Optional[Sequence[str]] = None) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for term, coefs in self.objective_terms.items():
            if terms is not None and term not in terms:
                continue
            for column, coef in coefs.items():
                c[column] += coef
        return c

    @cached_property
    def arrays(self) -> MilpArrays:
        return self.to_arrays()

    def to_arrays(self) -> MilpArrays:
        rows, cols, data = [], [], []
        for con in self.constraints:
            for column, coef in con.terms:
                rows.append(con.row)
                cols.append(column)
                data.append(coef)
        A = sparse.csr_matrix((data, (rows, cols)), shape=(self.num_constraints, self.num_vars))
        return MilpArrays(
            c=self.objective_vector(),
            A=A,
            row_lb=np.array([c.lb for c in self.constraints], dtype=float),
            row_ub=np.array([c.ub for c in self.constraints], dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            integrality=np.array([1 if v.vtype is VarType.BINARY else 0 for v in self.variables], dtype=np.int8),
        )

    # Derived models

    def _copy(self, constraints: List[LinearConstraint], variables: List[Variable],
              renumber: bool = True) -> "MilpModel":
        other = MilpModel(self.dims)
        other.variables = variables
        other._lookup = self._lookup
        other.objective_terms = self.objective_terms
        other.blocks = self.blocks
        if renumber:
            other.constraints = [replace(c, row=i) for i, c in enumerate(constraints)]
            for con in other.constraints:
                key = self._balance_key(con)
                if key is not None:
                    other.balance_rows[key] = con.row
        else:
            other.constraints = constraints
            other.balance_rows = self.balance_rows
        return other.freeze()

    @staticmethod
    def _balance_key(con: LinearConstraint):
        if con.family is Family.BALANCE and len(con.index) == 3:
            return tuple(con.index)
        return None

    def without_families(self, families: Iterable[Family]) -> "MilpModel":
        """Copy with every constraint of ``families`` removed."""
        drop = {Family(f) for f in families}
        return self._copy([c for c in self.constraints if c.family not in drop], list(self.variables))

    def with_fixed(self, values: Mapping[int, float], relax_integrality: bool = False) -> "MilpModel":
        """Copy with the given columns fixed to values (and optionally every binary relaxed)."""
        variables = list(self.variables)
        for column, value in values.items():
            variables[column] = replace(variables[column], lb=float(value), ub=float(value))
        if relax_integrality:
            variables = [replace(v, vtype=VarType.CONTINUOUS) if v.vtype is VarType.BINARY else v
                         for v in variables]
        other = self._copy(self.constraints, variables, renumber=False)

        # Rows are shared, so only the bound and integrality vectors change
        base = self.arrays
        lb, ub = base.lb.copy(), base.ub.copy()
        columns = np.fromiter(values.keys(), dtype=np.int64, count=len(values))
        fixed = np.fromiter(values.values(), dtype=float, count=len(values))
        lb[columns], ub[columns] = fixed, fixed
        integrality = np.zeros_like(base.integrality) if relax_integrality else base.integrality
        other.__dict__["arrays"] = replace(base, lb=lb, ub=ub, integrality=integrality)
        return other

    # Debug output

    def dump(self) -> str:
        """One line per constraint: family, name[index], expression, sense, bound."""
        lines = []
        for con in self.constraints:
            expr = " ".join(f"{coef:+.6g} {self.variables[col].label}" for col, coef in con.terms) or "0"
            if con.sense == "in":
                bound = f"[{con.lb:.6g}, {con.ub:.6g}]"
            elif con.sense == "<=":
                bound = f"{con.ub:.6g}"
            else:
                bound = f"{con.lb:.6g}"
            lines.append(f"{con.family.value:<7} {con.label:<24} {expr} {con.sense} {bound}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return (
            f"MilpModel(variant={self.dims.variant!r}, vars={self.num_vars}, "
            f"binaries={len(self.binary_columns)}, constraints={self.num_constraints})"
        )
