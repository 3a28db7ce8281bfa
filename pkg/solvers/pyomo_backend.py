"""Pyomo front-end: any solver reachable through ``SolverFactory`` (appsi_highs, glpk, cbc, gurobi, ...)."""

import time
from typing import Dict

import numpy as np

from exceptions import BackendUnavailable, NumericFailure
from milp import MilpModel

from .base import BackendResult, SolverBackend, SolveStatus, SolverOptions

try:
    import pyomo.environ as pyo
    from pyomo.opt import TerminationCondition
except ImportError:  # pragma: no cover
    pyo = None
    TerminationCondition = None

DEFAULT_SOLVER = "appsi_highs"

# SolverOptions field -> solver-specific option name
OPTION_NAMES: Dict[str, Dict[str, str]] = {
    "appsi_highs": {"gap": "mip_rel_gap", "time": "time_limit", "threads": "threads", "seed": "random_seed"},
    "highs": {"gap": "mip_rel_gap", "time": "time_limit", "threads": "threads", "seed": "random_seed"},
    "gurobi": {"gap": "MIPGap", "time": "TimeLimit", "threads": "Threads", "seed": "Seed"},
    "gurobi_direct": {"gap": "MIPGap", "time": "TimeLimit", "threads": "Threads", "seed": "Seed"},
    "cplex": {"gap": "mipgap", "time": "timelimit", "threads": "threads", "seed": "randomseed"},
    "cbc": {"gap": "ratioGap", "time": "seconds", "threads": "threads", "seed": "randomSeed"},
    "glpk": {"gap": "mipgap", "time": "tmlim"},
}


class PyomoBackend(SolverBackend):
    """Re-expresses the sparse rows as a Pyomo ConcreteModel and hands it to a named solver."""

    name = "pyomo"

    def __init__(self, solver_name: str = DEFAULT_SOLVER, logger=None):
        super().__init__(solver_name or DEFAULT_SOLVER, logger)

    @classmethod
    def available(cls, solver_name: str = DEFAULT_SOLVER) -> bool:
        if pyo is None:
            return False
        try:
            return bool(pyo.SolverFactory(solver_name or DEFAULT_SOLVER).available(exception_flag=False))
        except Exception:
            return False

    def _factory(self):
        if pyo is None:
            raise BackendUnavailable("pyomo is not installed")
        opt = pyo.SolverFactory(self.solver_name)
        try:
            ok = opt.available(exception_flag=False)
        except Exception:
            ok = False
        if not ok:
            raise BackendUnavailable(f"pyomo solver {self.solver_name!r} is not available")
        return opt

    def _apply_options(self, opt, options: SolverOptions, mip: bool) -> None:
        names = OPTION_NAMES.get(self.solver_name, {})
        if "time" in names:
            opt.options[names["time"]] = options.time_limit_seconds
        if mip and "gap" in names:
            opt.options[names["gap"]] = options.relative_mip_gap
        threads = options.threads or (1 if options.deterministic_mode else None)
        if threads is not None and "threads" in names:
            opt.options[names["threads"]] = threads
        if options.deterministic_mode and "seed" in names:
            opt.options[names["seed"]] = 0

    def _concrete(self, model: MilpModel, relax: bool):
        arrays = model.arrays
        A = arrays.A
        m = pyo.ConcreteModel(name=f"scuc_{model.dims.variant}")
        columns = range(model.num_vars)

        def domain(_, j):
            return pyo.Binary if arrays.integrality[j] and not relax else pyo.Reals

        def bounds(_, j):
            lb, ub = arrays.lb[j], arrays.ub[j]
            return (lb if np.isfinite(lb) else None, ub if np.isfinite(ub) else None)

        m.x = pyo.Var(columns, domain=domain, bounds=bounds)

        def row_rule(_, i):
            start, end = A.indptr[i], A.indptr[i + 1]
            if start == end:
                return pyo.Constraint.Skip
            expr = pyo.quicksum(float(A.data[p]) * m.x[int(A.indices[p])] for p in range(start, end))
            lb, ub = arrays.row_lb[i], arrays.row_ub[i]
            if lb == ub:
                return expr == float(lb)
            if not np.isfinite(lb):
                return expr <= float(ub)
            if not np.isfinite(ub):
                return expr >= float(lb)
            return pyo.inequality(float(lb), expr, float(ub))

        m.rows = pyo.Constraint(range(model.num_constraints), rule=row_rule)
        c = arrays.c
        m.obj = pyo.Objective(
            expr=pyo.quicksum(float(c[j]) * m.x[j] for j in np.flatnonzero(c)),
            sense=pyo.minimize,
        )
        return m

    def _solve(self, model: MilpModel, options: SolverOptions, mip: bool) -> BackendResult:
        opt = self._factory()
        self._apply_options(opt, options, mip)
        m = self._concrete(model, relax=not mip)
        if not mip:
            m.dual = pyo.Suffix(direction=pyo.Suffix.IMPORT)

        start = time.perf_counter()
        results = opt.solve(m, load_solutions=False, tee=False)
        seconds = time.perf_counter() - start
        condition = results.solver.termination_condition
        message = str(condition)
        self.logger.debug(f"termination={condition} in {seconds:.2f}s")

        has_solution = len(getattr(results, "solution", [])) > 0
        if condition == TerminationCondition.optimal:
            status = SolveStatus.OPTIMAL
        elif condition in (TerminationCondition.infeasible, TerminationCondition.infeasibleOrUnbounded):
            return BackendResult(SolveStatus.INFEASIBLE, message=message, seconds=seconds)
        elif condition in (TerminationCondition.maxTimeLimit, TerminationCondition.feasible):
            if not has_solution:
                return BackendResult(SolveStatus.TIME_LIMIT, message=message, seconds=seconds)
            status = SolveStatus.FEASIBLE
        else:
            raise NumericFailure(
                f"{self.label} stopped with {condition}",
                diagnostics={"backend": self.label, "termination": message,
                             "status": str(results.solver.status)},
            )

        m.solutions.load_from(results)
        x = np.array([pyo.value(m.x[j], exception=False) or 0.0 for j in range(model.num_vars)], dtype=float)
        objective = float(pyo.value(m.obj))

        gap = None
        if mip:
            lower = getattr(results.problem, "lower_bound", None)
            upper = getattr(results.problem, "upper_bound", None)
            try:
                gap = abs(float(upper) - float(lower)) / max(abs(float(upper)), 1e-10)
            except (TypeError, ValueError):
                gap = 0.0 if status is SolveStatus.OPTIMAL else None

        duals = None
        if not mip:
            duals = np.array(
                [m.dual.get(m.rows[i], 0.0) if i in m.rows else 0.0 for i in range(model.num_constraints)],
                dtype=float,
            )
        return BackendResult(status, x, objective, gap, duals, message=message, seconds=seconds)

    def solve_milp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        return self._solve(model, options, mip=True)

    def solve_lp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        return self._solve(model, options, mip=False)
