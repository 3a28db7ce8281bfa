"""SciPy's HiGHS bindings: ``optimize.milp`` for MILPs and ``optimize.linprog`` for duals."""

import time

import numpy as np
from scipy import optimize, sparse

from exceptions import NumericFailure
from milp import MilpModel

from .base import BackendResult, SolverBackend, SolveStatus, SolverOptions

# scipy.optimize.milp status codes
_MILP_OPTIMAL, _MILP_LIMIT, _MILP_INFEASIBLE, _MILP_UNBOUNDED = 0, 1, 2, 3
# scipy.optimize.linprog status codes
_LP_OPTIMAL, _LP_LIMIT, _LP_INFEASIBLE, _LP_UNBOUNDED = 0, 1, 2, 3


class ScipyHighsBackend(SolverBackend):
    """Default backend, needs nothing beyond scipy."""

    name = "highs"

    def solve_milp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        arrays = model.arrays
        constraints = []
        if model.num_constraints:
            constraints.append(optimize.LinearConstraint(arrays.A, arrays.row_lb, arrays.row_ub))

        # HiGHS through scipy runs single-threaded, which also makes it deterministic
        if options.threads not in (None, 1):
            self.logger.debug(f"threads={options.threads} ignored by scipy.optimize.milp")

        start = time.perf_counter()
        res = optimize.milp(
            c=arrays.c,
            integrality=arrays.integrality,
            bounds=optimize.Bounds(arrays.lb, arrays.ub),
            constraints=constraints or None,
            options={
                "disp": False,
                "presolve": True,
                "time_limit": options.time_limit_seconds,
                "mip_rel_gap": options.relative_mip_gap,
            },
        )
        seconds = time.perf_counter() - start
        gap = getattr(res, "mip_gap", None)
        gap = None if gap is None else float(gap)
        self.logger.debug(f"milp status={res.status} ({res.message}) in {seconds:.2f}s")

        if res.status == _MILP_OPTIMAL:
            return BackendResult(SolveStatus.OPTIMAL, np.asarray(res.x), float(res.fun), gap,
                                 message=res.message, seconds=seconds)
        if res.status == _MILP_LIMIT:
            if res.x is not None:
                return BackendResult(SolveStatus.FEASIBLE, np.asarray(res.x), float(res.fun), gap,
                                     message=res.message, seconds=seconds)
            return BackendResult(SolveStatus.TIME_LIMIT, message=res.message, seconds=seconds)
        if res.status == _MILP_INFEASIBLE or _infeasible_or_unbounded(res):
            return BackendResult(SolveStatus.INFEASIBLE, message=res.message, seconds=seconds)
        raise NumericFailure(
            f"HiGHS MILP failed: {res.message}",
            diagnostics={"backend": self.label, "status": int(res.status), "message": res.message},
        )

    def solve_lp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        arrays = model.arrays
        A = arrays.A
        lo, hi = arrays.row_lb, arrays.row_ub

        # linprog wants A_eq x = b_eq and A_ub x <= b_ub; ranged rows are split
        eq = np.flatnonzero(lo == hi)
        upper = np.flatnonzero((lo != hi) & np.isfinite(hi))
        lower = np.flatnonzero((lo != hi) & np.isfinite(lo))

        A_ub = sparse.vstack([A[upper], -A[lower]], format="csr") if len(upper) + len(lower) else None
        b_ub = np.concatenate([hi[upper], -lo[lower]]) if A_ub is not None else None
        A_eq = A[eq] if len(eq) else None
        b_eq = lo[eq] if len(eq) else None
        bounds = [
            (None if not np.isfinite(l) else l, None if not np.isfinite(u) else u)
            for l, u in zip(arrays.lb, arrays.ub)
        ]

        start = time.perf_counter()
        res = optimize.linprog(
            c=arrays.c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=bounds,
            method="highs",
            options={"time_limit": options.time_limit_seconds, "presolve": True},
        )
        seconds = time.perf_counter() - start
        self.logger.debug(f"linprog status={res.status} ({res.message}) in {seconds:.2f}s")

        if res.status == _LP_INFEASIBLE or _infeasible_or_unbounded(res):
            return BackendResult(SolveStatus.INFEASIBLE, message=res.message, seconds=seconds)
        if res.status == _LP_LIMIT:
            return BackendResult(SolveStatus.TIME_LIMIT, message=res.message, seconds=seconds)
        if res.status != _LP_OPTIMAL:
            raise NumericFailure(
                f"HiGHS LP failed: {res.message}",
                diagnostics={"backend": self.label, "status": int(res.status), "message": res.message},
            )

        duals = np.zeros(model.num_constraints)
        if len(eq):
            duals[eq] = res.eqlin.marginals
        if A_ub is not None:
            marginals = np.asarray(res.ineqlin.marginals)
            duals[upper] += marginals[: len(upper)]
            # Rows flipped to -a.x <= -lb: d obj / d lb = -marginal
            duals[lower] -= marginals[len(upper):]
        return BackendResult(SolveStatus.OPTIMAL, np.asarray(res.x), float(res.fun), 0.0, duals,
                             message=res.message, seconds=seconds)


def _infeasible_or_unbounded(res) -> bool:
    # Presolve may stop at "infeasible or unbounded"; objectives here are bounded below
    return res.status == _MILP_UNBOUNDED and "infeasible" in str(res.message).lower()
