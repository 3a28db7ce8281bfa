"""
Solver gateway: backend selection, MILP solves, fixed-binary LP resolves for
prices, and an exhaustive oracle for tiny models.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from builder import Solution, build_model, check_solution_feasibility
from config import APP_CONFIG
from exceptions import (
    BackendUnavailable,
    DimensionMismatch,
    LPInfeasibleUnderFixing,
    NumericFailure,
    TooManyBinaries,
    ZeroProbability,
)
from logging_config import PerformanceLogger, get_logger
from milp import FAMILY_ORDER, MilpModel
from scenarios import ScenarioSet
from solvers import BACKEND_CLASSES, SolverBackend, SolverOptions, SolveStatus
from variants import EffectiveCase

logger = get_logger("gateway")


def get_backend(spec: Optional[str] = None, logger_: Optional[logging.Logger] = None) -> SolverBackend:
    """
    Resolve a ``solver.backend`` value such as ``highs`` or ``pyomo:glpk``.

    Raises:
        BackendUnavailable: unknown backend or solver not installed
    """
    spec = (spec or APP_CONFIG.solver_backend or "highs").strip()
    name, _, solver_name = spec.partition(":")
    backend_class = BACKEND_CLASSES.get(name.lower())
    if backend_class is None:
        choices = ", ".join(sorted(BACKEND_CLASSES))
        raise BackendUnavailable(f"unknown solver backend {spec!r} (expected one of {choices})")
    if solver_name:
        backend = backend_class(solver_name, logger=logger_)
    else:
        backend = backend_class(logger=logger_)
    if not backend_class.available(backend.solver_name):
        raise BackendUnavailable(f"solver backend {backend.label!r} is not available")
    return backend


def default_options() -> SolverOptions:
    """Library defaults (tight gap) with limits taken from the environment."""
    return SolverOptions(
        relative_mip_gap=1e-6,
        time_limit_seconds=APP_CONFIG.time_limit_seconds,
        threads=APP_CONFIG.threads,
        deterministic_mode=APP_CONFIG.deterministic,
    )


def diagnose_infeasibility(model: MilpModel, opts: SolverOptions, backend: SolverBackend) -> Optional[str]:
    """First family (canonical order) whose removal makes the model feasible, or None."""
    present = model.families()
    for family in FAMILY_ORDER:
        if family not in present:
            continue
        result = backend.solve_milp(model.without_families([family]), opts)
        if result.status.has_solution:
            logger.info(f"Model becomes feasible without {family.value} constraints")
            return family.value
    return None


def solve_milp(
    model: MilpModel,
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
    *,
    diagnose: bool = True,
    verify_tol: Optional[float] = None,
) -> Solution:
    """
    Solve the MILP and return a (polished) Solution.

    Infeasible and time-limited solves return a Solution with no point and
    the matching status; for infeasible ones the first constraint family whose
    removal restores feasibility is stored in ``infeasible_family``.

    Raises:
        BackendUnavailable: backend cannot run
        NumericFailure: solver failure, with diagnostics
    """
    opts = opts or default_options()
    backend = backend or get_backend()
    with PerformanceLogger(logger, f"MILP solve ({model.dims.variant}, {backend.label})", logging.DEBUG):
        result = backend.solve_milp(model, opts)

    if not result.status.has_solution:
        sol = Solution.empty(model, result.status.value, result.message, backend.label)
        sol.solve_seconds = result.seconds
        if result.status is SolveStatus.INFEASIBLE and diagnose:
            sol.infeasible_family = diagnose_infeasibility(model, opts, backend)
        return sol

    sol = Solution.from_vector(
        model, result.x, status=result.status.value, mip_gap=result.mip_gap,
        backend=backend.label, solve_seconds=result.seconds, message=result.message,
    )
    tol = verify_tol if verify_tol is not None else APP_CONFIG.feasibility_tolerance
    report = check_solution_feasibility(sol, model, tol)
    if not report.passed:
        sol.verification_failures = tuple(report.failed_families())
        logger.warning(f"Solver point fails verification: {report}")
    logger.info(f"{model.dims.variant}: {sol.status}, objective {sol.objective:.6f} in {result.seconds:.2f}s")
    return sol


@dataclass
class DualSurface:
    """Duals of the nodal balance rows, shape (S, N, T)."""

    lam: np.ndarray
    bus_ids: Tuple[str, ...]
    probabilities: Tuple[float, ...]
    interval_hours: float = 1.0


@dataclass
class LmpSurface:
    """Per-scenario prices in $/MWh, shape (S, N, T)."""

    values: np.ndarray
    bus_ids: Tuple[str, ...]
    probabilities: Tuple[float, ...]

    def expected(self) -> np.ndarray:
        """Probability-weighted price per (bus, interval)."""
        weights = np.asarray(self.probabilities, dtype=float)
        return np.tensordot(weights / weights.sum(), self.values, axes=1)


def _assignment_from(model: MilpModel, fixed: Union[Solution, Mapping[int, float]]) -> dict:
    if isinstance(fixed, Solution):
        return fixed.binary_assignment(model)
    assignment = {int(col): float(val) for col, val in fixed.items()}
    missing = set(model.binary_columns) - set(assignment)
    if missing:
        raise ValueError(f"assignment leaves {len(missing)} binary variable(s) free")
    bad = [col for col, val in assignment.items() if val not in (0.0, 1.0)]
    if bad:
        raise ValueError(f"binary values must be 0 or 1 (columns {bad[:5]})")
    return assignment


def solve_lp_fixed(
    model: MilpModel,
    fixed_binaries: Union[Solution, Mapping[int, float]],
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
) -> Tuple[Solution, DualSurface]:
    """
    Re-solve with every binary fixed and read the balance-row duals.

    Args:
        model: The MILP
        fixed_binaries: Column -> 0/1 for every binary, or a Solution to take them from

    Raises:
        LPInfeasibleUnderFixing: the fixed LP has no feasible point
    """
    opts = opts or default_options()
    backend = backend or get_backend()
    assignment = _assignment_from(model, fixed_binaries)
    lp = model.with_fixed(assignment, relax_integrality=True)
    result = backend.solve_lp(lp, opts)
    if result.status is SolveStatus.INFEASIBLE:
        raise LPInfeasibleUnderFixing(f"fixed-binary LP is infeasible ({result.message})")
    if result.status is not SolveStatus.OPTIMAL:
        raise NumericFailure(f"fixed-binary LP stopped with {result.status.value}",
                             diagnostics={"backend": backend.label, "message": result.message})

    sol = Solution.from_vector(model, result.x, status=SolveStatus.OPTIMAL.value, mip_gap=0.0,
                               backend=backend.label, solve_seconds=result.seconds, message=result.message)
    d = model.dims
    lam = np.zeros((d.scenario_count, len(d.bus_ids), d.horizon))
    bus_pos = {b: i for i, b in enumerate(d.bus_ids)}
    for (bus, t, s), row in model.balance_rows.items():
        lam[s, bus_pos[bus], t] = result.row_duals[row]
    if not np.all(np.isfinite(lam)):
        raise NumericFailure("non-finite balance duals", diagnostics={"backend": backend.label})
    return sol, DualSurface(lam, d.bus_ids, d.probabilities, d.interval_hours)


def extract_lmp(duals: DualSurface, scen: Optional[ScenarioSet] = None) -> LmpSurface:
    """
    De-weight balance duals into per-scenario prices: LMP = lambda / (pi * dT).

    The weights are the ones the model was built with; ``scen`` is only
    checked for a matching scenario count.

    Raises:
        ZeroProbability: some scenario has probability zero
    """
    probs = np.asarray(duals.probabilities, dtype=float)
    if scen is not None and scen.count != len(probs):
        raise DimensionMismatch(f"duals cover {len(probs)} scenarios, scenario set has {scen.count}")
    zero = np.flatnonzero(probs <= 0)
    if zero.size:
        raise ZeroProbability(f"scenario(s) {zero.tolist()} have zero probability")
    values = duals.lam / (probs[:, None, None] * duals.interval_hours)
    return LmpSurface(values, duals.bus_ids, tuple(duals.probabilities))


def price_solution(
    model: MilpModel,
    sol: Solution,
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
) -> Optional[LmpSurface]:
    """Attach LMPs from the fixed-binary resolve to ``sol``; None if it cannot be priced."""
    if not sol.is_feasible:
        return None
    try:
        _, duals = solve_lp_fixed(model, sol, opts, backend)
        lmp = extract_lmp(duals)
    except (LPInfeasibleUnderFixing, ZeroProbability, NumericFailure) as e:
        logger.warning(f"Could not price {model.dims.variant} solution: {e}")
        return None
    sol.lmp = lmp.values
    return lmp


def solve_case(
    eff: EffectiveCase,
    scen: ScenarioSet,
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
    *,
    with_prices: bool = True,
    normalize_probabilities: bool = True,
) -> Tuple[MilpModel, Solution]:
    """Build, solve and (optionally) price one variant."""
    with PerformanceLogger(logger, f"building {eff.variant.value} model", logging.DEBUG):
        model = build_model(eff, scen, normalize_probabilities=normalize_probabilities)
    sol = solve_milp(model, opts, backend)
    if with_prices:
        price_solution(model, sol, opts, backend)
    return model, sol


def _screen_rows(model: MilpModel):
    """Rows whose every term is a binary; they can be checked without an LP."""
    binaries = set(model.binary_columns)
    return [con for con in model.constraints if con.terms and all(col in binaries for col, _ in con.terms)]


def brute_force_oracle(
    model: MilpModel,
    limit: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
) -> Solution:
    """
    Enumerate every binary assignment and keep the best LP.

    Assignments are visited in lexicographic order and only a strict
    improvement replaces the incumbent, so among equal optima the
    lexicographically smallest assignment wins.

    Raises:
        TooManyBinaries: more binaries than ``limit`` (default from config, 20)
    """
    limit = APP_CONFIG.oracle_binary_limit if limit is None else limit
    binaries = model.binary_columns
    if len(binaries) > limit:
        raise TooManyBinaries(len(binaries), limit)
    opts = opts or default_options()
    backend = backend or get_backend()
    screen = _screen_rows(model)

    best_x, best_obj, explored = None, np.inf, 0
    with PerformanceLogger(logger, f"oracle over {2 ** len(binaries)} assignments", logging.DEBUG):
        for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
            assignment = dict(zip(binaries, bits))
            if not all(
                con.lb - 1e-9 <= sum(coef * assignment[col] for col, coef in con.terms) <= con.ub + 1e-9
                for con in screen
            ):
                continue
            explored += 1
            result = backend.solve_lp(model.with_fixed(assignment, relax_integrality=True), opts)
            if result.status is not SolveStatus.OPTIMAL:
                continue
            if best_x is None or result.objective < best_obj - 1e-9 * max(1.0, abs(best_obj)):
                best_obj, best_x = result.objective, result.x

    logger.debug(f"Oracle solved {explored} LPs")
    label = f"oracle/{backend.label}"
    if best_x is None:
        return Solution.empty(model, SolveStatus.INFEASIBLE.value, "no binary assignment is feasible", label)
    return Solution.from_vector(model, best_x, status=SolveStatus.OPTIMAL.value, mip_gap=0.0, backend=label)
