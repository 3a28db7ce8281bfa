"""Structural validation of cases and the report types it produces."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List

import networkx as nx

from models import CaseFile


@dataclass(frozen=True)
class ValidationIssue:
    """One violated invariant."""

    entity: str
    entity_id: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.entity} {self.entity_id!r}: {self.rule}"
        return f"{text} ({self.detail})" if self.detail else text

    def to_dict(self) -> dict:
        return {"entity": self.entity, "entity_id": self.entity_id, "rule": self.rule, "detail": self.detail}


@dataclass
class ValidationReport:
    """Ordered list of issues; empty means valid."""

    issues: List[ValidationIssue] = field(default_factory=list)

    def add(self, entity: str, entity_id: str, rule: str, detail: str = "") -> None:
        self.issues.append(ValidationIssue(entity, str(entity_id), rule, detail))

    def extend(self, other: "ValidationReport") -> None:
        self.issues.extend(other.issues)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        # Truthy when there is something to report
        return bool(self.issues)

    def __len__(self) -> int:
        return len(self.issues)

    def has(self, entity: str, rule: str) -> bool:
        return any(i.entity == entity and i.rule == rule for i in self.issues)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "issues": [i.to_dict() for i in self.issues]}


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


def validate_case(case: CaseFile) -> ValidationReport:
    """
    Check every structural invariant of a case.

    Never raises; problems are listed in the returned report. The report is
    empty iff the case is well-formed and its network (without candidate
    physical-line branches) is connected.
    """
    report = ValidationReport()
    horizon = case.horizon

    # Unique ids per entity kind
    for entity, items in (
        ("Bus", case.buses),
        ("Branch", case.branches),
        ("ThermalGen", case.thermal_gens),
        ("RenewableUnit", case.renewables),
        ("StorageUnit", case.storages),
        ("VtlPair", case.vtl_pairs),
        ("LoadProfile", case.load_profiles),
    ):
        for item_id, count in Counter(i.id for i in items).items():
            if count > 1:
                report.add(entity, item_id, "ids unique", f"appears {count} times")

    if not case.buses:
        report.add("CaseFile", case.name, "at least one bus")
    if horizon == 0:
        report.add("CaseFile", case.name, "horizon T >= 1", "no load or renewable profile")

    bus_ids = set(case.bus_ids)
    profile_ids = {p.id for p in case.load_profiles}

    for bus in case.buses:
        if bus.load_profile_ref is not None and bus.load_profile_ref not in profile_ids:
            report.add("Bus", bus.id, "load_profile_ref resolves", f"no load profile {bus.load_profile_ref!r}")

    for k in case.branches:
        if k.from_bus not in bus_ids or k.to_bus not in bus_ids:
            report.add("Branch", k.id, "terminal buses exist", f"{k.from_bus} -> {k.to_bus}")
        if k.from_bus == k.to_bus:
            report.add("Branch", k.id, "from_bus != to_bus")
        if not (_finite(k.reactance_pu) and k.reactance_pu > 0):
            report.add("Branch", k.id, "reactance_pu > 0", f"got {k.reactance_pu}")
        if not (_finite(k.flow_limit_mw) and k.flow_limit_mw > 0):
            report.add("Branch", k.id, "flow_limit_mw > 0", f"got {k.flow_limit_mw}")

    for g in case.thermal_gens:
        if g.bus not in bus_ids:
            report.add("ThermalGen", g.id, "bus exists", g.bus)
        if not (0 <= g.p_min_mw <= g.p_max_mw):
            report.add("ThermalGen", g.id, "0 <= p_min <= p_max", f"p_min={g.p_min_mw}, p_max={g.p_max_mw}")
        if g.ramp_mw_per_interval is not None and g.ramp_mw_per_interval < 0:
            report.add("ThermalGen", g.id, "ramp >= 0", f"got {g.ramp_mw_per_interval}")
        if min(g.cost_linear_per_mwh, g.cost_no_load_per_interval, g.cost_startup) < 0:
            report.add("ThermalGen", g.id, "costs >= 0")
        if not (0 <= g.initial_output_mw <= g.p_max_mw):
            report.add("ThermalGen", g.id, "initial_output in [0, p_max]", f"got {g.initial_output_mw}")
        if not g.initial_status and g.initial_output_mw != 0:
            report.add("ThermalGen", g.id, "initial_output = 0 when offline", f"got {g.initial_output_mw}")

    for r in case.renewables:
        if r.bus not in bus_ids:
            report.add("RenewableUnit", r.id, "bus exists", r.bus)
        if len(r.base_profile_mw) != horizon:
            report.add("RenewableUnit", r.id, "length = T", f"{len(r.base_profile_mw)} != {horizon}")
        if any(v < 0 or not math.isfinite(v) for v in r.base_profile_mw):
            report.add("RenewableUnit", r.id, "base_profile values >= 0")

    for e in case.storages:
        if e.bus not in bus_ids:
            report.add("StorageUnit", e.id, "bus exists", e.bus)
        if not (0 <= e.e_min_mwh <= e.initial_energy_mwh <= e.e_max_mwh):
            report.add(
                "StorageUnit", e.id, "0 <= e_min <= initial_energy <= e_max",
                f"{e.e_min_mwh}, {e.initial_energy_mwh}, {e.e_max_mwh}",
            )
        if e.p_charge_max_mw <= 0 or e.p_discharge_max_mw <= 0:
            report.add("StorageUnit", e.id, "power limits > 0")
        if not (0 < e.eta_charge <= 1 and 0 < e.eta_discharge <= 1):
            report.add("StorageUnit", e.id, "efficiencies in (0,1]")
        if e.terminal_energy_min_mwh is not None and not (
            e.e_min_mwh <= e.terminal_energy_min_mwh <= e.e_max_mwh
        ):
            report.add("StorageUnit", e.id, "terminal floor within [e_min, e_max]")

    storages = {e.id: e for e in case.storages}
    for vt in case.vtl_pairs:
        ids = vt.storage_ids
        if len(ids) != 2 or ids[0] == ids[1]:
            report.add("VtlPair", vt.id, "exactly two distinct storage ids", f"got {list(ids)}")
            continue
        missing = [s for s in ids if s not in storages]
        if missing:
            report.add("VtlPair", vt.id, "storage ids resolve", ", ".join(missing))
            continue
        if vt.spanned_branch is not None:
            branch = case.branch(vt.spanned_branch)
            if branch is None:
                report.add("VtlPair", vt.id, "spanned_branch exists", vt.spanned_branch)
            elif {storages[s].bus for s in ids} != {branch.from_bus, branch.to_bus}:
                report.add("VtlPair", vt.id, "storages sit on the spanned branch terminals")

    for p in case.load_profiles:
        if p.bus not in bus_ids:
            report.add("LoadProfile", p.id, "bus exists", p.bus)
        if len(p.demand_mw) != horizon:
            report.add("LoadProfile", p.id, "length = T", f"{len(p.demand_mw)} != {horizon}")
        if any(v < 0 or not math.isfinite(v) for v in p.demand_mw):
            report.add("LoadProfile", p.id, "values >= 0")

    opts = case.options
    if not (_finite(opts.interval_hours) and opts.interval_hours > 0):
        report.add("CaseOptions", "options", "interval_hours > 0")
    if opts.penalty_solar_per_mwh < 0 or opts.penalty_wind_per_mwh < 0:
        report.add("CaseOptions", "options", "penalties >= 0")
    if case.buses and case.reference_bus not in bus_ids:
        report.add("CaseOptions", "options", "reference_bus exists", str(case.reference_bus))
    if not (0 < opts.congestion_epsilon <= 0.01):
        report.add("CaseOptions", "options", "congestion_epsilon in (0, 0.01]")
    if opts.base_mva <= 0:
        report.add("CaseOptions", "options", "base_mva > 0")

    # Connectivity ignores candidate lines so Base/BESS/VTL share the verdict
    graph = nx.Graph()
    graph.add_nodes_from(bus_ids)
    graph.add_edges_from(
        (k.from_bus, k.to_bus)
        for k in case.branches
        if not k.is_candidate_pt and k.from_bus in bus_ids and k.to_bus in bus_ids
    )
    if graph.number_of_nodes() > 1 and not nx.is_connected(graph):
        islands = sorted(len(c) for c in nx.connected_components(graph))
        report.add("CaseFile", case.name, "network connected", f"island sizes {islands}")

    return report
