"""Build the two-stage stochastic SCUC model and read, price and check its solutions."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from exceptions import BadProbabilities, DimensionMismatch, ScenarioCaseMismatch, SchemaError
from logging_config import get_logger
from milp import INF, Family, MilpModel, ModelDims, VarType
from models import CaseOptions
from scenarios import PROBABILITY_TOLERANCE, ScenarioSet, require_matching
from variants import EffectiveCase

SOLUTION_SCHEMA = "vtl-scuc-sol/1"
OBJECTIVE_TERMS = ("no_load", "startup", "weighted_energy", "curtailment_penalty")

# Model variable block -> Solution attribute
BLOCK_FIELDS = {
    "u": "commitment",
    "v": "startup",
    "p": "generation",
    "theta": "angle",
    "flow": "flow",
    "curt": "curtailment",
    "p_ch": "charge",
    "p_dis": "discharge",
    "soc": "energy",
    "u_ch": "charge_mode",
    "u_dis": "discharge_mode",
}
BINARY_BLOCKS = ("u", "v", "u_ch", "u_dis")

logger = get_logger("builder")


def scenario_weights(scen: ScenarioSet, normalize: bool = True) -> np.ndarray:
    """Scenario probabilities, rescaled to sum to one when ``normalize`` is set."""
    if scen.count == 0:
        raise ScenarioCaseMismatch("scenario set is empty")
    if len(scen.probabilities) != scen.count:
        raise BadProbabilities(f"{len(scen.probabilities)} probabilities for {scen.count} scenarios")
    probs = np.asarray(scen.probabilities, dtype=float)
    total = float(probs.sum())
    if normalize and abs(total - 1.0) > PROBABILITY_TOLERANCE:
        if total <= 0:
            raise BadProbabilities("scenario probabilities sum to zero")
        logger.warning(f"Scenario probabilities sum to {total:.12g}; rescaling to 1")
        probs = probs / total
    return probs


def build_model(
    eff: EffectiveCase,
    scen: ScenarioSet,
    opts: Optional[CaseOptions] = None,
    *,
    normalize_probabilities: bool = True,
) -> MilpModel:
    """
    Translate an effective case and a scenario set into the extensive-form MILP.

    Commitment (u) and startup (v) are indexed by (g, t) only and shared by
    every scenario; everything else carries the scenario index.

    Args:
        eff: Case restricted to the chosen variant
        scen: Renewable scenarios covering every unit of the case
        opts: Case options override (defaults to the case's own)
        normalize_probabilities: Rescale probabilities that do not sum to one

    Returns:
        Frozen MilpModel

    Raises:
        ScenarioCaseMismatch: scenarios do not cover the case
        IndexingError: internal reference to a missing variable
    """
    case = eff.case
    opts = opts or case.options
    require_matching(scen, case)
    probs = scenario_weights(scen, normalize_probabilities)

    T, S, dt = case.horizon, scen.count, opts.interval_hours
    gens, buses, renewables = case.thermal_gens, case.buses, case.renewables
    branches, storages, pairs = eff.branches, eff.storages, eff.vtl_pairs
    G, N, K, R, E = len(gens), len(buses), len(branches), len(renewables), len(storages)

    bus_pos = {b.id: i for i, b in enumerate(buses)}
    storage_pos = {e.id: i for i, e in enumerate(storages)}
    families = eff.families

    dims = ModelDims(
        variant=eff.variant.value,
        gen_ids=tuple(g.id for g in gens),
        bus_ids=tuple(b.id for b in buses),
        branch_ids=tuple(k.id for k in branches),
        renewable_ids=tuple(r.id for r in renewables),
        storage_ids=tuple(e.id for e in storages),
        vtl_ids=tuple(vt.id for vt in pairs),
        horizon=T,
        probabilities=tuple(float(p) for p in probs),
        interval_hours=dt,
        base_mva=opts.base_mva,
        renewable_kinds=tuple(r.kind.value for r in renewables),
        branch_from=tuple(bus_pos[k.from_bus] for k in branches),
        branch_to=tuple(bus_pos[k.to_bus] for k in branches),
        reactance_pu=tuple(k.reactance_pu for k in branches),
        flow_limit_mw=tuple(k.flow_limit_mw for k in branches),
        eta_charge=tuple(e.eta_charge for e in storages),
        eta_discharge=tuple(e.eta_discharge for e in storages),
        initial_energy_mwh=tuple(e.initial_energy_mwh for e in storages),
        vtl_members=tuple((storage_pos[vt.storage_ids[0]], storage_pos[vt.storage_ids[1]]) for vt in pairs),
    )
    m = MilpModel(dims)

    # First-stage commitment
    u = np.empty((G, T), dtype=np.int64)
    v = np.empty((G, T), dtype=np.int64)
    for gi, g in enumerate(gens):
        for t in range(T):
            u[gi, t] = m.add_var("u", (g.id, t), VarType.BINARY)
            v[gi, t] = m.add_var("v", (g.id, t), VarType.BINARY)

    # Second stage
    p = np.empty((S, G, T), dtype=np.int64)
    theta = np.empty((S, N, T), dtype=np.int64)
    flow = np.empty((S, K, T), dtype=np.int64)
    curt = np.empty((S, R, T), dtype=np.int64)
    p_ch = np.empty((S, E, T), dtype=np.int64)
    p_dis = np.empty((S, E, T), dtype=np.int64)
    soc = np.empty((S, E, T), dtype=np.int64)
    u_ch = np.empty((S, E, T), dtype=np.int64)
    u_dis = np.empty((S, E, T), dtype=np.int64)
    for s in range(S):
        for t in range(T):
            for gi, g in enumerate(gens):
                p[s, gi, t] = m.add_var("p", (g.id, t, s), lb=0.0)
            for ni, b in enumerate(buses):
                theta[s, ni, t] = m.add_var("theta", (b.id, t, s), lb=-INF, ub=INF)
            for ki, k in enumerate(branches):
                flow[s, ki, t] = m.add_var("flow", (k.id, t, s), lb=-INF, ub=INF)
            for ri, r in enumerate(renewables):
                curt[s, ri, t] = m.add_var("curt", (r.id, t, s), lb=0.0)
            for ei, e in enumerate(storages):
                p_ch[s, ei, t] = m.add_var("p_ch", (e.id, t, s), lb=0.0)
                p_dis[s, ei, t] = m.add_var("p_dis", (e.id, t, s), lb=0.0)
                soc[s, ei, t] = m.add_var("soc", (e.id, t, s), lb=-INF, ub=INF)
                u_ch[s, ei, t] = m.add_var("u_ch", (e.id, t, s), VarType.BINARY)
                u_dis[s, ei, t] = m.add_var("u_dis", (e.id, t, s), VarType.BINARY)

    for name, columns in (("u", u), ("v", v), ("p", p), ("theta", theta), ("flow", flow), ("curt", curt),
                          ("p_ch", p_ch), ("p_dis", p_dis), ("soc", soc), ("u_ch", u_ch), ("u_dis", u_dis)):
        m.register_block(name, columns)

    # Startup logic: v_t >= u_t - u_{t-1}
    for gi, g in enumerate(gens):
        u0 = 1.0 if g.initial_status else 0.0
        for t in range(T):
            if t == 0:
                m.add_constraint(Family.UC, "startup", (g.id, t), [(v[gi, t], 1.0), (u[gi, t], -1.0)], lb=-u0)
            else:
                m.add_constraint(
                    Family.UC, "startup", (g.id, t),
                    [(v[gi, t], 1.0), (u[gi, t], -1.0), (u[gi, t - 1], 1.0)], lb=0.0,
                )

    for s in range(S):
        for gi, g in enumerate(gens):
            for t in range(T):
                m.add_constraint(Family.LIMIT, "gen_min", (g.id, t, s),
                                 [(p[s, gi, t], 1.0), (u[gi, t], -g.p_min_mw)], lb=0.0)
                m.add_constraint(Family.LIMIT, "gen_max", (g.id, t, s),
                                 [(p[s, gi, t], 1.0), (u[gi, t], -g.p_max_mw)], ub=0.0)

            if g.ramp_mw_per_interval is None:
                continue
            ramp = g.ramp_mw_per_interval
            for t in range(T):
                if t == 0:
                    # Units starting offline are exempt at the first interval
                    if g.initial_status:
                        p0 = g.initial_output_mw
                        m.add_constraint(Family.RAMP, "ramp", (g.id, t, s), [(p[s, gi, t], 1.0)],
                                         lb=p0 - ramp, ub=p0 + ramp)
                    continue
                m.add_constraint(Family.RAMP, "ramp", (g.id, t, s),
                                 [(p[s, gi, t], 1.0), (p[s, gi, t - 1], -1.0)], lb=-ramp, ub=ramp)

    # DC flow: (x / base) * P_k = theta_from - theta_to, with P in MW
    for s in range(S):
        for ki, k in enumerate(branches):
            f, to = bus_pos[k.from_bus], bus_pos[k.to_bus]
            for t in range(T):
                m.add_constraint(
                    Family.FLOW, "flow", (k.id, t, s),
                    [(flow[s, ki, t], k.reactance_pu / opts.base_mva),
                     (theta[s, f, t], -1.0), (theta[s, to, t], 1.0)],
                    lb=0.0, ub=0.0,
                )
                m.add_constraint(Family.LIMIT, "line_limit", (k.id, t, s), [(flow[s, ki, t], 1.0)],
                                 lb=-k.flow_limit_mw, ub=k.flow_limit_mw)

    availability = np.zeros((S, R, T))
    for s in range(S):
        for ri, r in enumerate(renewables):
            availability[s, ri] = scen.availability(r.id, s)
            for t in range(T):
                m.add_constraint(Family.CURT, "curtail", (r.id, t, s), [(curt[s, ri, t], 1.0)],
                                 ub=float(availability[s, ri, t]))

    # Nodal balance; the dual of each row is the (probability-weighted) price
    demand = np.array(case.demand_matrix(), dtype=float).reshape(N, T)
    gens_at = {b.id: [gi for gi, g in enumerate(gens) if g.bus == b.id] for b in buses}
    res_at = {b.id: [ri for ri, r in enumerate(renewables) if r.bus == b.id] for b in buses}
    stor_at = {b.id: [ei for ei, e in enumerate(storages) if e.bus == b.id] for b in buses}
    inflow = {b.id: [ki for ki, k in enumerate(branches) if k.to_bus == b.id] for b in buses}
    outflow = {b.id: [ki for ki, k in enumerate(branches) if k.from_bus == b.id] for b in buses}
    for s in range(S):
        for t in range(T):
            for ni, b in enumerate(buses):
                terms = [(p[s, gi, t], 1.0) for gi in gens_at[b.id]]
                terms += [(flow[s, ki, t], 1.0) for ki in inflow[b.id]]
                terms += [(flow[s, ki, t], -1.0) for ki in outflow[b.id]]
                terms += [(curt[s, ri, t], -1.0) for ri in res_at[b.id]]
                for ei in stor_at[b.id]:
                    terms += [(p_dis[s, ei, t], 1.0), (p_ch[s, ei, t], -1.0)]
                rhs = demand[ni, t] - sum(availability[s, ri, t] for ri in res_at[b.id])
                m.add_constraint(Family.BALANCE, "balance", (b.id, t, s), terms, lb=rhs, ub=rhs)

    ref = bus_pos[case.reference_bus]
    for s in range(S):
        for t in range(T):
            m.add_constraint(Family.REF, "ref_angle", (case.reference_bus, t, s), [(theta[s, ref, t], 1.0)],
                             lb=0.0, ub=0.0)

    if Family.SOC in families:
        for s in range(S):
            for ei, e in enumerate(storages):
                for t in range(T):
                    idx = (e.id, t, s)
                    m.add_constraint(Family.SOC, "mode", idx, [(u_ch[s, ei, t], 1.0), (u_dis[s, ei, t], 1.0)],
                                     ub=1.0)
                    m.add_constraint(Family.SOC, "charge_max", idx,
                                     [(p_ch[s, ei, t], 1.0), (u_ch[s, ei, t], -e.p_charge_max_mw)], ub=0.0)
                    m.add_constraint(Family.SOC, "discharge_max", idx,
                                     [(p_dis[s, ei, t], 1.0), (u_dis[s, ei, t], -e.p_discharge_max_mw)], ub=0.0)
                    m.add_constraint(Family.SOC, "energy_bounds", idx, [(soc[s, ei, t], 1.0)],
                                     lb=e.e_min_mwh, ub=e.e_max_mwh)
                    terms = [(soc[s, ei, t], 1.0), (p_ch[s, ei, t], -e.eta_charge * dt),
                             (p_dis[s, ei, t], dt / e.eta_discharge)]
                    rhs = 0.0
                    if t == 0:
                        rhs = e.initial_energy_mwh
                    else:
                        terms.append((soc[s, ei, t - 1], -1.0))
                    m.add_constraint(Family.SOC, "energy_balance", idx, terms, lb=rhs, ub=rhs)
                if e.terminal_energy_min_mwh is not None and T > 0:
                    m.add_constraint(Family.SOC, "terminal_energy", (e.id, T - 1, s),
                                     [(soc[s, ei, T - 1], 1.0)], lb=e.terminal_energy_min_mwh)

    if Family.VTL in families:
        for s in range(S):
            for vt in pairs:
                a, b_ = (storage_pos[i] for i in vt.storage_ids)
                for t in range(T):
                    m.add_constraint(Family.VTL, "pair_charge", (vt.id, t, s),
                                     [(u_ch[s, a, t], 1.0), (u_ch[s, b_, t], 1.0)], ub=1.0)
                    m.add_constraint(Family.VTL, "pair_discharge", (vt.id, t, s),
                                     [(u_dis[s, a, t], 1.0), (u_dis[s, b_, t], 1.0)], ub=1.0)

    # Objective
    for gi, g in enumerate(gens):
        for t in range(T):
            m.add_objective("no_load", u[gi, t], g.cost_no_load_per_interval)
            m.add_objective("startup", v[gi, t], g.cost_startup)
            for s in range(S):
                m.add_objective("weighted_energy", p[s, gi, t], probs[s] * g.cost_linear_per_mwh * dt)
    for ri, r in enumerate(renewables):
        rho = opts.penalty_for(r.kind)
        for s in range(S):
            for t in range(T):
                m.add_objective("curtailment_penalty", curt[s, ri, t], probs[s] * rho * dt)

    m.freeze()
    logger.debug(f"Built {m!r}")
    return m


@dataclass
class ObjectiveBreakdown:
    no_load: float = 0.0
    startup: float = 0.0
    weighted_energy: float = 0.0
    curtailment_penalty: float = 0.0

    @property
    def total(self) -> float:
        return self.no_load + self.startup + self.weighted_energy + self.curtailment_penalty

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in OBJECTIVE_TERMS}

    @classmethod
    def from_model(cls, model: MilpModel, x: np.ndarray) -> "ObjectiveBreakdown":
        values = {}
        for name in OBJECTIVE_TERMS:
            coefs = model.objective_terms.get(name, {})
            values[name] = float(sum(coef * x[col] for col, coef in coefs.items()))
        return cls(**values)


def _nan_to_none(value: Optional[float]):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


@dataclass
class Solution:
    """
    One commitment schedule plus per-scenario dispatch.

    Array shapes: commitment/startup (G, T); generation (S, G, T); angle
    (S, N, T); flow (S, K, T); curtailment (S, R, T); storage arrays (S, E, T).
    """

    variant: str
    status: str
    commitment: np.ndarray
    startup: np.ndarray
    generation: np.ndarray
    angle: np.ndarray
    flow: np.ndarray
    curtailment: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    energy: np.ndarray
    charge_mode: np.ndarray
    discharge_mode: np.ndarray
    objective: float = float("nan")
    breakdown: ObjectiveBreakdown = field(default_factory=ObjectiveBreakdown)
    mip_gap: Optional[float] = None
    backend: str = ""
    solve_seconds: float = 0.0
    message: str = ""
    gen_ids: Tuple[str, ...] = ()
    bus_ids: Tuple[str, ...] = ()
    branch_ids: Tuple[str, ...] = ()
    renewable_ids: Tuple[str, ...] = ()
    renewable_kinds: Tuple[str, ...] = ()
    storage_ids: Tuple[str, ...] = ()
    probabilities: Tuple[float, ...] = ()
    interval_hours: float = 1.0
    lmp: Optional[np.ndarray] = None
    infeasible_family: Optional[str] = None
    # families whose rows the returned point violates beyond tolerance
    verification_failures: Tuple[str, ...] = ()

    @property
    def is_feasible(self) -> bool:
        return self.status in ("optimal", "feasible")

    @property
    def verified(self) -> bool:
        return not self.verification_failures

    @property
    def scenario_count(self) -> int:
        return self.generation.shape[0]

    @property
    def horizon(self) -> int:
        return self.commitment.shape[1]

    @classmethod
    def _ids_from(cls, model: MilpModel) -> Dict[str, Any]:
        d = model.dims
        return dict(
            variant=d.variant,
            gen_ids=d.gen_ids, bus_ids=d.bus_ids, branch_ids=d.branch_ids,
            renewable_ids=d.renewable_ids, renewable_kinds=d.renewable_kinds,
            storage_ids=d.storage_ids, probabilities=d.probabilities, interval_hours=d.interval_hours,
        )

    @classmethod
    def empty(cls, model: MilpModel, status: str, message: str = "", backend: str = "") -> "Solution":
        """Placeholder for a solve that produced no point."""
        arrays = {attr: np.zeros(model.block(name).shape) for name, attr in BLOCK_FIELDS.items()}
        return cls(status=status, message=message, backend=backend, **arrays, **cls._ids_from(model))

    @classmethod
    def from_vector(
        cls,
        model: MilpModel,
        x: np.ndarray,
        *,
        status: str = "optimal",
        mip_gap: Optional[float] = None,
        backend: str = "",
        solve_seconds: float = 0.0,
        message: str = "",
        polish: bool = True,
    ) -> "Solution":
        """
        Read a primal vector back into arrays.

        With ``polish`` the binaries are rounded, branch flows are recomputed
        from the bus angles and storage energy from the charge/discharge
        recursion, so those identities hold to machine precision.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (model.num_vars,):
            raise DimensionMismatch(f"vector has shape {x.shape}, model has {model.num_vars} variables")
        arrays = {attr: x[model.block(name)] for name, attr in BLOCK_FIELDS.items()}

        if polish:
            d = model.dims
            for name in BINARY_BLOCKS:
                attr = BLOCK_FIELDS[name]
                arrays[attr] = np.rint(arrays[attr])
            if d.branch_ids:
                angle = arrays["angle"]
                scale = d.base_mva / np.asarray(d.reactance_pu)[None, :, None]
                arrays["flow"] = scale * (angle[:, list(d.branch_from), :] - angle[:, list(d.branch_to), :])
            if d.storage_ids:
                arrays["energy"] = _energy_trajectory(
                    arrays["charge"], arrays["discharge"], d.eta_charge, d.eta_discharge,
                    d.initial_energy_mwh, d.interval_hours,
                )

        sol = cls(status=status, mip_gap=mip_gap, backend=backend, solve_seconds=solve_seconds,
                  message=message, **arrays, **cls._ids_from(model))
        x_final = sol.to_vector(model)
        sol.breakdown = ObjectiveBreakdown.from_model(model, x_final)
        sol.objective = sol.breakdown.total
        return sol

    def to_vector(self, model: MilpModel) -> np.ndarray:
        x = np.zeros(model.num_vars)
        for name, attr in BLOCK_FIELDS.items():
            columns = model.block(name)
            values = np.asarray(getattr(self, attr), dtype=float)
            if values.shape != columns.shape:
                raise DimensionMismatch(f"{attr} has shape {values.shape}, model expects {columns.shape}")
            x[columns] = values
        return x

    def binary_assignment(self, model: MilpModel) -> Dict[int, float]:
        """Column -> 0/1 for every binary variable of ``model``."""
        x = self.to_vector(model)
        return {col: float(round(x[col])) for col in model.binary_columns}

    def first_stage_assignment(self, model: MilpModel) -> Dict[int, float]:
        """
        Column -> 0/1 for the commitment and startup variables of ``model``.

        Only the first stage is read, so ``model`` may have a different
        scenario count than the model this solution came from.
        """
        assignment: Dict[int, float] = {}
        for name, values in (("u", self.commitment), ("v", self.startup)):
            columns = model.block(name)
            values = np.rint(np.asarray(values, dtype=float))
            if values.shape != columns.shape:
                raise DimensionMismatch(f"{name} has shape {values.shape}, model expects {columns.shape}")
            assignment.update(zip(columns.ravel().tolist(), values.ravel().tolist()))
        return assignment

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "schema": SOLUTION_SCHEMA,
            "variant": self.variant,
            "status": self.status,
            "backend": self.backend,
            "mip_gap": _nan_to_none(self.mip_gap),
            "solve_seconds": self.solve_seconds,
            "message": self.message,
            "infeasible_family": self.infeasible_family,
            "verification_failures": list(self.verification_failures),
            "objective": _nan_to_none(self.objective),
            "breakdown": self.breakdown.to_dict(),
            "ids": {
                "gens": list(self.gen_ids),
                "buses": list(self.bus_ids),
                "branches": list(self.branch_ids),
                "renewables": list(self.renewable_ids),
                "renewable_kinds": list(self.renewable_kinds),
                "storages": list(self.storage_ids),
            },
            "probabilities": list(self.probabilities),
            "interval_hours": self.interval_hours,
            "horizon": self.horizon,
            "lmp": None if self.lmp is None else np.asarray(self.lmp).tolist(),
        }
        for attr in BLOCK_FIELDS.values():
            data[attr] = np.asarray(getattr(self, attr)).tolist()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = True) -> "Solution":
        if not isinstance(data, dict):
            raise SchemaError("solution document must be an object")
        if data.get("schema") != SOLUTION_SCHEMA:
            raise SchemaError(f"unsupported solution schema {data.get('schema')!r} (expected {SOLUTION_SCHEMA!r})")
        known = {"schema", "variant", "status", "backend", "mip_gap", "solve_seconds", "message",
                 "infeasible_family", "verification_failures", "objective", "breakdown", "ids",
                 "probabilities", "interval_hours", "horizon", "lmp"}
        known |= set(BLOCK_FIELDS.values())
        if strict:
            unknown = sorted(set(data) - known)
            if unknown:
                raise SchemaError(f"solution: unknown field(s) {', '.join(unknown)}")
        try:
            ids = data["ids"]
            G, S = len(ids["gens"]), len(data["probabilities"])
            kinds = tuple(ids.get("renewable_kinds", ()))
            if len(kinds) != len(ids["renewables"]):
                raise SchemaError(
                    f"solution: ids.renewable_kinds has {len(kinds)} entries for {len(ids['renewables'])} renewables"
                )
            T = int(data["horizon"])
            shapes = {
                "commitment": (G, T), "startup": (G, T),
                "generation": (S, G, T), "angle": (S, len(ids["buses"]), T),
                "flow": (S, len(ids["branches"]), T), "curtailment": (S, len(ids["renewables"]), T),
            }
            for attr in ("charge", "discharge", "energy", "charge_mode", "discharge_mode"):
                shapes[attr] = (S, len(ids["storages"]), T)
            arrays = {}
            for attr, shape in shapes.items():
                arr = np.asarray(data[attr], dtype=float)
                if arr.size == 0:
                    arr = arr.reshape(shape)
                if arr.shape != shape:
                    raise SchemaError(f"solution: {attr} has shape {arr.shape}, expected {shape}")
                arrays[attr] = arr
            breakdown = ObjectiveBreakdown(**{k: float(data["breakdown"][k]) for k in OBJECTIVE_TERMS})
            objective = data.get("objective")
            lmp = data.get("lmp")
            return cls(
                variant=str(data["variant"]),
                status=str(data["status"]),
                objective=float("nan") if objective is None else float(objective),
                breakdown=breakdown,
                mip_gap=data.get("mip_gap"),
                backend=str(data.get("backend", "")),
                solve_seconds=float(data.get("solve_seconds", 0.0)),
                message=str(data.get("message", "")),
                infeasible_family=data.get("infeasible_family"),
                verification_failures=tuple(data.get("verification_failures", ())),
                gen_ids=tuple(ids["gens"]),
                bus_ids=tuple(ids["buses"]),
                branch_ids=tuple(ids["branches"]),
                renewable_ids=tuple(ids["renewables"]),
                renewable_kinds=kinds,
                storage_ids=tuple(ids["storages"]),
                probabilities=tuple(float(p) for p in data["probabilities"]),
                interval_hours=float(data.get("interval_hours", 1.0)),
                lmp=None if lmp is None else np.asarray(lmp, dtype=float),
                **arrays,
            )
        except SchemaError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise SchemaError(f"solution: malformed document: {e!r}") from e


def _energy_trajectory(charge, discharge, eta_c, eta_d, e0, dt) -> np.ndarray:
    """E_t = E_{t-1} + (eta_c * P^c - P^d / eta_d) * dt with E_{-1} = initial energy."""
    charge = np.asarray(charge, dtype=float)
    discharge = np.asarray(discharge, dtype=float)
    energy = np.empty_like(charge)
    eta_c = np.asarray(eta_c, dtype=float)[None, :]
    eta_d = np.asarray(eta_d, dtype=float)[None, :]
    previous = np.broadcast_to(np.asarray(e0, dtype=float)[None, :], charge.shape[:2]).copy()
    for t in range(charge.shape[2]):
        previous = previous + (eta_c * charge[:, :, t] - discharge[:, :, t] / eta_d) * dt
        energy[:, :, t] = previous
    return energy


def objective_breakdown(
    sol: Solution,
    eff: EffectiveCase,
    scen: ScenarioSet,
    opts: Optional[CaseOptions] = None,
    *,
    normalize_probabilities: bool = True,
) -> ObjectiveBreakdown:
    """Recompute every objective term from the raw solution arrays."""
    case = eff.case
    opts = opts or case.options
    probs = scenario_weights(scen, normalize_probabilities)
    G, T, S, R = len(case.thermal_gens), case.horizon, scen.count, len(case.renewables)

    expected = {
        "commitment": (G, T), "startup": (G, T), "generation": (S, G, T), "curtailment": (S, R, T),
    }
    for attr, shape in expected.items():
        actual = np.shape(getattr(sol, attr))
        if actual != shape:
            raise DimensionMismatch(f"solution {attr} has shape {actual}, expected {shape}")

    dt = opts.interval_hours
    c_nl = np.array([g.cost_no_load_per_interval for g in case.thermal_gens]).reshape(G, 1)
    c_su = np.array([g.cost_startup for g in case.thermal_gens]).reshape(G, 1)
    c = np.array([g.cost_linear_per_mwh for g in case.thermal_gens]).reshape(1, G, 1)
    rho = np.array([opts.penalty_for(r.kind) for r in case.renewables]).reshape(1, R, 1)

    energy_per_scenario = (c * sol.generation).sum(axis=(1, 2)) * dt
    penalty_per_scenario = (rho * sol.curtailment).sum(axis=(1, 2)) * dt
    return ObjectiveBreakdown(
        no_load=float((c_nl * sol.commitment).sum()),
        startup=float((c_su * sol.startup).sum()),
        weighted_energy=float(probs @ energy_per_scenario),
        curtailment_penalty=float(probs @ penalty_per_scenario),
    )


def evaluate_objective(
    sol: Solution,
    eff: EffectiveCase,
    scen: ScenarioSet,
    opts: Optional[CaseOptions] = None,
    *,
    normalize_probabilities: bool = True,
) -> float:
    """Total cost recomputed from the solution, independent of the solver's value."""
    return objective_breakdown(sol, eff, scen, opts, normalize_probabilities=normalize_probabilities).total


@dataclass
class FeasibilityReport:
    """Maximum violation per constraint family (plus BOUNDS and INTEGRALITY)."""

    tol: float
    max_violation: Dict[str, float] = field(default_factory=dict)
    offenders: List[Tuple[str, str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.max_violation.values())

    def failed_families(self) -> List[str]:
        return [name for name, v in self.max_violation.items() if v > self.tol]

    def __str__(self) -> str:
        if self.passed:
            return f"PASS (tol {self.tol:g})"
        worst = ", ".join(f"{name}={self.max_violation[name]:.3g}" for name in self.failed_families())
        return f"FAIL (tol {self.tol:g}): {worst}"


def check_solution_feasibility(sol: Solution, model: MilpModel, tol: float = 1e-6) -> FeasibilityReport:
    """
    Independently verify a solution against every constraint of ``model``.

    Besides the row check this recomputes the storage energy recursion from
    the arrays and checks pair exclusivity on rounded binaries. Never raises
    for a bad solution; problems show up as violations.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    report = FeasibilityReport(tol=tol)
    try:
        x = sol.to_vector(model)
    except DimensionMismatch as e:
        report.max_violation["DIMENSIONS"] = INF
        report.offenders.append(("DIMENSIONS", str(e), INF))
        return report

    arrays = model.arrays
    for family in model.families():
        report.max_violation[family.value] = 0.0
    if model.num_constraints:
        ax = arrays.A @ x
        violation = np.maximum(np.maximum(arrays.row_lb - ax, ax - arrays.row_ub), 0.0)
        for con in model.constraints:
            value = float(violation[con.row])
            key = con.family.value
            if value > report.max_violation[key]:
                report.max_violation[key] = value
            if value > tol:
                report.offenders.append((key, con.label, value))

    bound_violation = np.maximum(np.maximum(arrays.lb - x, x - arrays.ub), 0.0)
    report.max_violation["BOUNDS"] = float(bound_violation.max()) if x.size else 0.0
    binaries = model.binary_columns
    report.max_violation["INTEGRALITY"] = (
        float(np.abs(x[binaries] - np.rint(x[binaries])).max()) if binaries else 0.0
    )

    d = model.dims
    if Family.SOC.value in report.max_violation and d.storage_ids:
        recomputed = _energy_trajectory(
            sol.charge, sol.discharge, d.eta_charge, d.eta_discharge, d.initial_energy_mwh, d.interval_hours,
        )
        residual = float(np.abs(np.asarray(sol.energy) - recomputed).max()) if recomputed.size else 0.0
        report.max_violation["SOC"] = max(report.max_violation["SOC"], residual)

    if Family.VTL.value in report.max_violation and d.vtl_members:
        for mode in (sol.charge_mode, sol.discharge_mode):
            rounded = np.rint(np.asarray(mode, dtype=float))
            for a, b in d.vtl_members:
                excess = float(np.maximum(rounded[:, a, :] + rounded[:, b, :] - 1.0, 0.0).max(initial=0.0))
                report.max_violation["VTL"] = max(report.max_violation["VTL"], excess)

    report.offenders.sort(key=lambda item: -item[2])
    del report.offenders[10:]
    return report
