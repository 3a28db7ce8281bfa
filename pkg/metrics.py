"""Evaluation metrics: cost, load payment, congestion, curtailment and stochastic-value diagnostics."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from builder import ObjectiveBreakdown, Solution
from config import APP_CONFIG
from exceptions import (
    BaselineMissing,
    DimensionMismatch,
    EEVInfeasible,
    MixedProvenance,
    ModelInfeasible,
    SchemaError,
    StochasticBoundsViolation,
)
from gateway import LmpSurface, get_backend, solve_case, solve_milp
from logging_config import ContextLogger, get_logger
from models import CaseFile, ModelVariant
from scenarios import ScenarioSet
from solvers import SolverBackend, SolverOptions
from variants import EffectiveCase, apply_variant

REPORT_SCHEMA = "vtl-scuc-report/1"
LMP_CONVENTIONS = ("expected", "unweighted")

logger = get_logger("metrics")


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 0.01:
        raise ValueError(f"congestion epsilon must be in (0, 0.01], got {eps}")


def congestion_tolerance(case: CaseFile, eps: Optional[float] = None) -> float:
    """The congestion epsilon in force: explicit value, then SCUC_CONGESTION_EPS, then the case options."""
    if eps is not None:
        return eps
    if APP_CONFIG.congestion_epsilon is not None:
        return APP_CONFIG.congestion_epsilon
    return case.options.congestion_epsilon


def load_payment(lmp: LmpSurface, case: CaseFile, scen: ScenarioSet, convention: str = "expected") -> float:
    """
    Sum of demand times price over buses, intervals and scenarios.

    ``expected`` weights each scenario by its probability; ``unweighted``
    adds the scenarios up as they are.
    """
    if convention not in LMP_CONVENTIONS:
        raise ValueError(f"unknown LMP convention {convention!r}")
    demand = np.array([case.bus_demand(b) for b in lmp.bus_ids], dtype=float)
    if lmp.values.shape[1:] != demand.shape:
        raise DimensionMismatch(f"LMP surface {lmp.values.shape} does not match demand {demand.shape}")
    per_scenario = (lmp.values * demand[None, :, :]).sum(axis=(1, 2)) * case.options.interval_hours
    if convention == "expected":
        return float(np.asarray(scen.probabilities, dtype=float) @ per_scenario)
    return float(per_scenario.sum())


def _congestion_mask(sol: Solution, eff: EffectiveCase, eps: float) -> np.ndarray:
    _check_eps(eps)
    limits = {k.id: k.flow_limit_mw for k in eff.branches}
    try:
        limit = np.array([limits[k] for k in sol.branch_ids], dtype=float)
    except KeyError as e:
        raise DimensionMismatch(f"solution branch {e.args[0]!r} is not in the {eff.variant.value} network")
    flow = np.asarray(sol.flow, dtype=float)
    return np.abs(flow) >= (1.0 - eps) * limit[None, :, None]


def congestion_count(sol: Solution, eff: EffectiveCase, eps: float) -> Tuple[int, ...]:
    """Per scenario, the number of distinct branches at their limit in at least one interval."""
    mask = _congestion_mask(sol, eff, eps)
    return tuple(int(v) for v in mask.any(axis=2).sum(axis=1))


def congestion_line_hours(sol: Solution, eff: EffectiveCase, eps: float) -> Tuple[int, ...]:
    """Per scenario, the number of (branch, interval) cells at the limit."""
    mask = _congestion_mask(sol, eff, eps)
    return tuple(int(v) for v in mask.sum(axis=(1, 2)))


def curtailment_totals(sol: Solution, scen: Optional[ScenarioSet] = None) -> List[Dict[str, float]]:
    """Per scenario curtailed energy split into solar and wind."""
    curt = np.asarray(sol.curtailment, dtype=float)
    if scen is not None and curt.shape[0] != scen.count:
        raise DimensionMismatch(f"solution has {curt.shape[0]} scenarios, scenario set has {scen.count}")
    kinds = np.array(sol.renewable_kinds)
    totals = []
    for s in range(curt.shape[0]):
        per_unit = curt[s].sum(axis=1) * sol.interval_hours if curt.shape[1] else np.zeros(0)
        totals.append({
            "solar_mwh": float(per_unit[kinds == "solar"].sum()) if per_unit.size else 0.0,
            "wind_mwh": float(per_unit[kinds == "wind"].sum()) if per_unit.size else 0.0,
        })
    return totals


def branch_loading_rows(sol: Solution, eff: EffectiveCase, label: Optional[str] = None) -> List[Dict[str, Any]]:
    """Long-format |flow| / limit rows for heat maps."""
    limits = {k.id: k.flow_limit_mw for k in eff.branches}
    flow = np.asarray(sol.flow, dtype=float)
    rows = []
    for s in range(flow.shape[0]):
        for ki, branch in enumerate(sol.branch_ids):
            for t in range(flow.shape[2]):
                rows.append({
                    "variant": label or sol.variant,
                    "scenario": s,
                    "branch": branch,
                    "hour": t,
                    "loading_fraction": abs(float(flow[s, ki, t])) / limits[branch],
                })
    return rows


def commitment_differences(stochastic: Solution, deterministic: Sequence[Solution]) -> List[int]:
    """For each per-scenario solution, how many (g, t) commitment cells differ from the stochastic one."""
    reference = np.rint(np.asarray(stochastic.commitment, dtype=float))
    counts = []
    for sol in deterministic:
        other = np.rint(np.asarray(sol.commitment, dtype=float))
        if other.shape != reference.shape:
            raise DimensionMismatch(f"commitment shapes differ: {other.shape} vs {reference.shape}")
        counts.append(int((other != reference).sum()))
    return counts


@dataclass
class MetricsReport:
    """Metrics of one solved variant."""

    label: str
    variant: str
    status: str
    objective: float = float("nan")
    operational_cost: ObjectiveBreakdown = field(default_factory=ObjectiveBreakdown)
    load_payment: Dict[str, Optional[float]] = field(default_factory=dict)
    lmp_convention: str = "expected"
    congestion_counts: Tuple[int, ...] = ()
    congestion_line_hours: Tuple[int, ...] = ()
    curtailment_mwh: Tuple[Dict[str, float], ...] = ()
    congestion_epsilon: float = 1e-4
    case_digest: str = ""
    scenario_digest: str = ""

    @property
    def available(self) -> bool:
        return self.status in ("optimal", "feasible")

    @property
    def payment(self) -> Optional[float]:
        return self.load_payment.get(self.lmp_convention)

    def metric_values(self) -> Dict[str, Optional[float]]:
        """Flat metric name -> value map used by comparison tables."""
        values: Dict[str, Optional[float]] = {
            "operational_cost": self.objective if self.available else None,
            "load_payment_expected": self.load_payment.get("expected"),
            "load_payment_unweighted": self.load_payment.get("unweighted"),
        }
        for s, count in enumerate(self.congestion_counts):
            values[f"congestion_s{s}"] = float(count)
        for s, count in enumerate(self.congestion_line_hours):
            values[f"congestion_line_hours_s{s}"] = float(count)
        for s, curt in enumerate(self.curtailment_mwh):
            values[f"curtailment_solar_s{s}"] = curt["solar_mwh"]
            values[f"curtailment_wind_s{s}"] = curt["wind_mwh"]
            values[f"curtailment_total_s{s}"] = curt["solar_mwh"] + curt["wind_mwh"]
        return values

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "variant": self.variant,
            "status": self.status,
            "objective": None if math.isnan(self.objective) else self.objective,
            "operational_cost": self.operational_cost.to_dict(),
            "load_payment": dict(self.load_payment),
            "lmp_convention": self.lmp_convention,
            "congestion_counts": list(self.congestion_counts),
            "congestion_line_hours": list(self.congestion_line_hours),
            "curtailment_mwh": [dict(c) for c in self.curtailment_mwh],
            "congestion_epsilon": self.congestion_epsilon,
            "case_digest": self.case_digest,
            "scenario_digest": self.scenario_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = True) -> "MetricsReport":
        known = {"label", "variant", "status", "objective", "operational_cost", "load_payment", "lmp_convention",
                 "congestion_counts", "congestion_line_hours", "curtailment_mwh", "congestion_epsilon",
                 "case_digest", "scenario_digest"}
        if strict:
            unknown = sorted(set(data) - known)
            if unknown:
                raise SchemaError(f"metrics: unknown field(s) {', '.join(unknown)}")
        try:
            objective = data.get("objective")
            return cls(
                label=str(data["label"]),
                variant=str(data["variant"]),
                status=str(data["status"]),
                objective=float("nan") if objective is None else float(objective),
                operational_cost=ObjectiveBreakdown(**data.get("operational_cost", {})),
                load_payment=dict(data.get("load_payment", {})),
                lmp_convention=str(data.get("lmp_convention", "expected")),
                congestion_counts=tuple(int(v) for v in data.get("congestion_counts", [])),
                congestion_line_hours=tuple(int(v) for v in data.get("congestion_line_hours", [])),
                curtailment_mwh=tuple(dict(c) for c in data.get("curtailment_mwh", [])),
                congestion_epsilon=float(data.get("congestion_epsilon", 1e-4)),
                case_digest=str(data.get("case_digest", "")),
                scenario_digest=str(data.get("scenario_digest", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"metrics: malformed document: {e!r}") from e


def build_metrics(
    sol: Solution,
    eff: EffectiveCase,
    scen: ScenarioSet,
    lmp: Optional[LmpSurface] = None,
    *,
    label: Optional[str] = None,
    convention: str = "expected",
    eps: Optional[float] = None,
    case_digest: str = "",
) -> MetricsReport:
    """Collect every metric of one solved variant into a report."""
    eps = congestion_tolerance(eff.case, eps)
    _check_eps(eps)
    report = MetricsReport(
        label=label or eff.variant.value,
        variant=eff.variant.value,
        status=sol.status,
        lmp_convention=convention,
        congestion_epsilon=eps,
        case_digest=case_digest,
        scenario_digest=scen.digest(),
    )
    if not sol.is_feasible:
        return report

    report.objective = sol.objective
    report.operational_cost = sol.breakdown
    if lmp is None and sol.lmp is not None:
        lmp = LmpSurface(np.asarray(sol.lmp), sol.bus_ids, sol.probabilities)
    if lmp is not None:
        report.load_payment = {c: load_payment(lmp, eff.case, scen, c) for c in LMP_CONVENTIONS}
    else:
        report.load_payment = {c: None for c in LMP_CONVENTIONS}
    report.congestion_counts = congestion_count(sol, eff, eps)
    report.congestion_line_hours = congestion_line_hours(sol, eff, eps)
    report.curtailment_mwh = tuple(curtailment_totals(sol, scen))
    return report


@dataclass
class ComparisonCell:
    label: str
    metric: str
    value: Optional[float]
    percent: Optional[float] = None
    absolute: bool = False  # baseline is zero (or missing); value shown as is
    available: bool = True


@dataclass
class ComparisonTable:
    """Per-variant metrics as a percentage of the baseline."""

    baseline: str
    labels: List[str]
    metrics: List[str]
    cells: Dict[Tuple[str, str], ComparisonCell]

    def cell(self, label: str, metric: str) -> ComparisonCell:
        return self.cells[(label, metric)]

    def percent(self, label: str, metric: str) -> Optional[float]:
        return self.cells[(label, metric)].percent

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "metric": metric,
                "variant": label,
                "value": cell.value,
                "percent_of_baseline": cell.percent,
                "absolute": cell.absolute,
                "available": cell.available,
            }
            for metric in self.metrics
            for label in self.labels
            for cell in [self.cells[(label, metric)]]
        ]


def compare_variants(reports: Sequence[MetricsReport], baseline: str) -> ComparisonTable:
    """
    Express every metric of every report relative to the baseline report.

    Raises:
        BaselineMissing: no report carries the baseline label
        MixedProvenance: reports come from different cases or scenario sets
    """
    by_label = {r.label: r for r in reports}
    if baseline not in by_label:
        raise BaselineMissing(f"baseline {baseline!r} not among {sorted(by_label)}")
    scenario_digests = {r.scenario_digest for r in reports}
    case_digests = {r.case_digest for r in reports}
    if len(scenario_digests) > 1 or len(case_digests) > 1:
        raise MixedProvenance("reports were produced from different cases or scenario sets")

    base = by_label[baseline]
    metric_names: List[str] = []
    for report in [base] + list(reports):
        for name in report.metric_values():
            if name not in metric_names:
                metric_names.append(name)

    base_values = base.metric_values()
    cells = {}
    for report in reports:
        values = report.metric_values()
        for metric in metric_names:
            value = values.get(metric) if report.available else None
            reference = base_values.get(metric) if base.available else None
            if value is None:
                cells[(report.label, metric)] = ComparisonCell(report.label, metric, None, available=False)
            elif reference is None or reference == 0:
                cells[(report.label, metric)] = ComparisonCell(report.label, metric, value, absolute=True)
            else:
                cells[(report.label, metric)] = ComparisonCell(
                    report.label, metric, value, percent=100.0 * value / reference
                )
    return ComparisonTable(baseline, [r.label for r in reports], metric_names, cells)


def derived_claims(table: ComparisonTable, reference: str = ModelVariant.VTL.value) -> Dict[str, Any]:
    """
    Headline numbers derived from the comparison table.

    * cost advantage in percentage points: cost%(other) - cost%(reference)
    * congestion-relief advantage per scenario: (count_other - count_reference) / count_baseline
    """
    claims: Dict[str, Any] = {"reference": reference, "baseline": table.baseline}
    if reference not in table.labels:
        claims["note"] = f"reference variant {reference!r} not compared"
        return claims

    ref_cost = table.percent(reference, "operational_cost")
    claims["cost_reduction_pct"] = {
        label: (None if table.percent(label, "operational_cost") is None
                else 100.0 - table.percent(label, "operational_cost"))
        for label in table.labels
    }
    claims["cost_advantage_points"] = {
        label: (None if ref_cost is None or table.percent(label, "operational_cost") is None
                else table.percent(label, "operational_cost") - ref_cost)
        for label in table.labels if label != reference
    }

    scenarios = sorted(int(m[len("congestion_s"):]) for m in table.metrics if m.startswith("congestion_s"))
    relief: Dict[str, Any] = {}
    for label in table.labels:
        if label == reference:
            continue
        per_scenario = []
        for s in scenarios:
            metric = f"congestion_s{s}"
            other = table.cell(label, metric).value
            ours = table.cell(reference, metric).value
            base = table.cell(table.baseline, metric).value
            if other is None or ours is None or not base:
                per_scenario.append(None)
            else:
                per_scenario.append((other - ours) / base)
        known = [v for v in per_scenario if v is not None]
        relief[label] = {"per_scenario": per_scenario, "max": max(known) if known else None}
    claims["congestion_relief_advantage"] = relief
    return claims


@dataclass
class StochasticDiagnostics:
    ws: float
    rp: float
    eev: float
    vss: float
    evpi: float
    eev_feasible: bool = True
    eev_message: str = ""
    scenario_objectives: List[float] = field(default_factory=list)
    commitment_differences: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        def clean(v):
            return None if v is None or not math.isfinite(v) else v

        return {
            "WS": clean(self.ws),
            "RP": clean(self.rp),
            "EEV": clean(self.eev),
            "VSS": clean(self.vss),
            "EVPI": clean(self.evpi),
            "eev_feasible": self.eev_feasible,
            "eev_message": self.eev_message,
            "scenario_objectives": [clean(v) for v in self.scenario_objectives],
            "commitment_differences": list(self.commitment_differences),
        }


def stochastic_diagnostics(
    case: CaseFile,
    scen: ScenarioSet,
    variant,
    opts: Optional[SolverOptions] = None,
    backend: Optional[SolverBackend] = None,
    *,
    max_workers: Optional[int] = None,
    tol: Optional[float] = None,
) -> StochasticDiagnostics:
    """
    Wait-and-see, recourse and expected-value costs of one variant.

    RP is the stochastic optimum, WS the probability-weighted per-scenario
    optima and EEV the stochastic model re-solved with commitments fixed from
    the expected-scenario solve. An infeasible EEV is reported, not raised.

    Raises:
        ModelInfeasible: the stochastic or a per-scenario model is infeasible
        StochasticBoundsViolation: WS <= RP <= EEV fails beyond tolerance
    """
    eff = apply_variant(case, variant)
    backend = backend or get_backend()
    log = ContextLogger(logger, {"variant": eff.variant.value, "scenarios": scen.count})
    max_workers = max_workers or APP_CONFIG.max_concurrent_solves

    rp_model, rp_sol = solve_case(eff, scen, opts, backend, with_prices=False)
    if not rp_sol.is_feasible:
        raise ModelInfeasible("stochastic model is infeasible", rp_sol.infeasible_family)

    weights = np.asarray(rp_model.dims.probabilities)
    subsets = [scen.subset([s]) for s in range(scen.count)]

    def solve_one(subset: ScenarioSet) -> Solution:
        return solve_case(eff, subset, opts, backend, with_prices=False)[1]

    if max_workers > 1 and len(subsets) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            per_scenario = list(pool.map(solve_one, subsets))
    else:
        per_scenario = [solve_one(subset) for subset in subsets]
    for s, sol in enumerate(per_scenario):
        if not sol.is_feasible:
            raise ModelInfeasible(f"deterministic model for scenario {s} is infeasible", sol.infeasible_family)
    objectives = [sol.objective for sol in per_scenario]
    ws = float(weights @ np.asarray(objectives))
    rp = rp_sol.objective

    ev_sol = solve_one(scen.expected())
    eev, eev_feasible, eev_message = math.inf, False, ""
    if ev_sol.is_feasible:
        fixed = ev_sol.first_stage_assignment(rp_model)
        eev_sol = solve_milp(rp_model.with_fixed(fixed), opts, backend, diagnose=False)
        if eev_sol.is_feasible:
            eev, eev_feasible = eev_sol.objective, True
        else:
            eev_message = str(EEVInfeasible("expected-value commitment is infeasible for some scenario"))
    else:
        eev_message = str(EEVInfeasible("expected-value model itself is infeasible"))
    if not eev_feasible:
        log.warning(eev_message)

    gap = opts.relative_mip_gap if opts is not None else 1e-6
    slack = (tol if tol is not None else max(gap, 1e-6)) * max(1.0, abs(rp))
    evpi = rp - ws
    vss = eev - rp
    if evpi < -slack or vss < -slack:
        raise StochasticBoundsViolation(f"WS={ws:.6f} RP={rp:.6f} EEV={eev:.6f}")

    log.info(f"WS={ws:.4f} RP={rp:.4f} EEV={eev:.4f} VSS={vss:.4f} EVPI={evpi:.4f}")
    return StochasticDiagnostics(
        ws=ws, rp=rp, eev=eev, vss=vss, evpi=evpi,
        eev_feasible=eev_feasible, eev_message=eev_message,
        scenario_objectives=objectives,
        commitment_differences=commitment_differences(rp_sol, per_scenario),
    )
