"""Data models for the power system: buses, branches, units, storage and options."""

import re
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

from exceptions import SchemaError

CASE_SCHEMA = "vtl-scuc/1"


def _reject_unknown(data: Dict[str, Any], cls, entity: str, extra: Iterable[str] = ()) -> None:
    """Raise SchemaError if ``data`` has keys that are not fields of ``cls``."""
    allowed = {f.name for f in fields(cls)} | set(extra)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SchemaError(f"{entity}: unknown field(s) {', '.join(unknown)}")


def _require(data: Dict[str, Any], key: str, entity: str) -> Any:
    if key not in data:
        raise SchemaError(f"{entity}: missing required field {key!r}")
    return data[key]


def natural_key(identifier: str) -> Tuple:
    """Sort key ordering '2' before '10' and 'b2' before 'b10'."""
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", identifier))


class RenewableKind(str, Enum):
    SOLAR = "solar"
    WIND = "wind"


class ModelVariant(str, Enum):
    """The four congestion-mitigation formulations."""

    BASE = "base"
    PT = "pt"
    BESS = "bess"
    VTL = "vtl"

    @classmethod
    def parse(cls, value: "str | ModelVariant") -> "ModelVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown variant {value!r} (expected one of {choices})")


@dataclass(frozen=True)
class Bus:
    """A network node; demand comes from the referenced load profile."""

    id: str
    load_profile_ref: Optional[str] = None


@dataclass(frozen=True)
class Branch:
    """A line or transformer in the DC network."""

    id: str
    from_bus: str
    to_bus: str
    reactance_pu: float
    flow_limit_mw: float
    is_candidate_pt: bool = False


@dataclass(frozen=True)
class ThermalGen:
    """A slow thermal unit whose commitment is a first-stage decision."""

    id: str
    bus: str
    p_min_mw: float
    p_max_mw: float
    cost_linear_per_mwh: float
    ramp_mw_per_interval: Optional[float] = None  # None: no ramp limit
    cost_no_load_per_interval: float = 0.0
    cost_startup: float = 0.0
    initial_status: bool = False  # committed before the first interval
    initial_output_mw: float = 0.0


@dataclass(frozen=True)
class RenewableUnit:
    """A solar or wind plant with its forecast profile."""

    id: str
    bus: str
    kind: RenewableKind
    base_profile_mw: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", RenewableKind(self.kind))
        object.__setattr__(self, "base_profile_mw", tuple(float(v) for v in self.base_profile_mw))


@dataclass(frozen=True)
class StorageUnit:
    """A battery; active only in the storage variants."""

    id: str
    bus: str
    e_min_mwh: float
    e_max_mwh: float
    p_charge_max_mw: float
    p_discharge_max_mw: float
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    initial_energy_mwh: float = 0.0
    terminal_energy_min_mwh: Optional[float] = None


@dataclass(frozen=True)
class VtlPair:
    """Two storages coordinated across a congested line."""

    id: str
    storage_ids: Tuple[str, ...]
    spanned_branch: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "storage_ids", tuple(self.storage_ids))


@dataclass(frozen=True)
class LoadProfile:
    """Hourly demand at one bus (identical in every scenario)."""

    bus: str
    demand_mw: Tuple[float, ...]
    id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "demand_mw", tuple(float(v) for v in self.demand_mw))
        if self.id is None:
            object.__setattr__(self, "id", self.bus)


@dataclass(frozen=True)
class CaseOptions:
    """Case-wide constants."""

    interval_hours: float = 1.0
    penalty_solar_per_mwh: float = 500.0
    penalty_wind_per_mwh: float = 500.0
    reference_bus: Optional[str] = None  # None: lowest-numbered bus
    congestion_epsilon: float = 1e-4
    base_mva: float = 100.0

    def penalty_for(self, kind: RenewableKind) -> float:
        if RenewableKind(kind) is RenewableKind.SOLAR:
            return self.penalty_solar_per_mwh
        return self.penalty_wind_per_mwh


@dataclass(frozen=True)
class CaseFile:
    """Full static description of a power system case."""

    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...] = ()
    thermal_gens: Tuple[ThermalGen, ...] = ()
    renewables: Tuple[RenewableUnit, ...] = ()
    storages: Tuple[StorageUnit, ...] = ()
    vtl_pairs: Tuple[VtlPair, ...] = ()
    load_profiles: Tuple[LoadProfile, ...] = ()
    options: CaseOptions = field(default_factory=CaseOptions)
    name: str = "case"

    def __post_init__(self):
        for name in ("buses", "branches", "thermal_gens", "renewables",
                     "storages", "vtl_pairs", "load_profiles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def horizon(self) -> int:
        """Number of intervals T (0 if no profile defines it)."""
        lengths = [len(p.demand_mw) for p in self.load_profiles]
        lengths += [len(r.base_profile_mw) for r in self.renewables]
        return max(lengths) if lengths else 0

    @property
    def bus_ids(self) -> Tuple[str, ...]:
        return tuple(b.id for b in self.buses)

    @property
    def reference_bus(self) -> Optional[str]:
        if self.options.reference_bus is not None:
            return self.options.reference_bus
        if not self.buses:
            return None
        return min(self.bus_ids, key=natural_key)

    def bus_demand(self, bus_id: str) -> Tuple[float, ...]:
        """Demand vector of a bus (zeros when it has no load profile)."""
        profiles = {p.id: p for p in self.load_profiles}
        for bus in self.buses:
            if bus.id == bus_id and bus.load_profile_ref is not None:
                profile = profiles.get(bus.load_profile_ref)
                if profile is not None:
                    return profile.demand_mw
        return tuple(0.0 for _ in range(self.horizon))

    def demand_matrix(self) -> List[List[float]]:
        """Demand as [bus][t] in ``buses`` order."""
        return [list(self.bus_demand(b.id)) for b in self.buses]

    def storage(self, storage_id: str) -> Optional[StorageUnit]:
        return next((e for e in self.storages if e.id == storage_id), None)

    def branch(self, branch_id: str) -> Optional[Branch]:
        return next((k for k in self.branches if k.id == branch_id), None)

    def with_load_scaled(self, bus_id: str, hour: int, delta_mw: float) -> "CaseFile":
        """Copy of the case with ``delta_mw`` added to one bus/hour demand."""
        profiles = []
        target = next((b.load_profile_ref for b in self.buses if b.id == bus_id), None)
        if target is None:
            raise ValueError(f"bus {bus_id!r} has no load profile")
        for p in self.load_profiles:
            if p.id == target:
                demand = list(p.demand_mw)
                demand[hour] += delta_mw
                p = LoadProfile(bus=p.bus, demand_mw=tuple(demand), id=p.id)
            profiles.append(p)
        return CaseFile(
            buses=self.buses, branches=self.branches, thermal_gens=self.thermal_gens,
            renewables=self.renewables, storages=self.storages, vtl_pairs=self.vtl_pairs,
            load_profiles=tuple(profiles), options=self.options, name=self.name,
        )

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the versioned case document."""
        return {
            "schema": CASE_SCHEMA,
            "name": self.name,
            "buses": [{"id": b.id, "load_profile_ref": b.load_profile_ref} for b in self.buses],
            "branches": [
                {
                    "id": k.id,
                    "from_bus": k.from_bus,
                    "to_bus": k.to_bus,
                    "reactance_pu": k.reactance_pu,
                    "flow_limit_mw": k.flow_limit_mw,
                    "is_candidate_pt": k.is_candidate_pt,
                }
                for k in self.branches
            ],
            "thermal_gens": [
                {
                    "id": g.id,
                    "bus": g.bus,
                    "p_min_mw": g.p_min_mw,
                    "p_max_mw": g.p_max_mw,
                    "ramp_mw_per_interval": g.ramp_mw_per_interval,
                    "cost_linear_per_mwh": g.cost_linear_per_mwh,
                    "cost_no_load_per_interval": g.cost_no_load_per_interval,
                    "cost_startup": g.cost_startup,
                    "initial_status": "committed" if g.initial_status else "offline",
                    "initial_output_mw": g.initial_output_mw,
                }
                for g in self.thermal_gens
            ],
            "renewables": [
                {"id": r.id, "bus": r.bus, "kind": r.kind.value, "base_profile_mw": list(r.base_profile_mw)}
                for r in self.renewables
            ],
            "storages": [
                {
                    "id": e.id,
                    "bus": e.bus,
                    "e_min_mwh": e.e_min_mwh,
                    "e_max_mwh": e.e_max_mwh,
                    "p_charge_max_mw": e.p_charge_max_mw,
                    "p_discharge_max_mw": e.p_discharge_max_mw,
                    "eta_charge": e.eta_charge,
                    "eta_discharge": e.eta_discharge,
                    "initial_energy_mwh": e.initial_energy_mwh,
                    "terminal_energy_min_mwh": e.terminal_energy_min_mwh,
                }
                for e in self.storages
            ],
            "vtl_pairs": [
                {"id": vt.id, "storage_ids": list(vt.storage_ids), "spanned_branch": vt.spanned_branch}
                for vt in self.vtl_pairs
            ],
            "load_profiles": [
                {"id": p.id, "bus": p.bus, "demand_mw": list(p.demand_mw)} for p in self.load_profiles
            ],
            "options": {
                "interval_hours": self.options.interval_hours,
                "penalty_solar_per_mwh": self.options.penalty_solar_per_mwh,
                "penalty_wind_per_mwh": self.options.penalty_wind_per_mwh,
                "reference_bus": self.options.reference_bus,
                "congestion_epsilon": self.options.congestion_epsilon,
                "base_mva": self.options.base_mva,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = True) -> "CaseFile":
        """
        Build a case from its document form.

        Args:
            data: Parsed case document
            strict: Reject unknown fields

        Raises:
            SchemaError: on a wrong schema string, missing or unknown fields
        """
        if not isinstance(data, dict):
            raise SchemaError("case document must be an object")
        schema = data.get("schema", CASE_SCHEMA)
        if schema != CASE_SCHEMA:
            raise SchemaError(f"unsupported case schema {schema!r} (expected {CASE_SCHEMA!r})")
        if strict:
            allowed = {"schema", "name", "buses", "branches", "thermal_gens", "renewables",
                       "storages", "vtl_pairs", "load_profiles", "options"}
            unknown = sorted(set(data) - allowed)
            if unknown:
                raise SchemaError(f"case: unknown field(s) {', '.join(unknown)}")

        def items(key: str) -> List[Dict[str, Any]]:
            value = data.get(key, [])
            if not isinstance(value, list):
                raise SchemaError(f"case: {key!r} must be an array")
            return value

        try:
            buses = []
            for raw in items("buses"):
                if strict:
                    _reject_unknown(raw, Bus, "bus")
                buses.append(Bus(id=str(_require(raw, "id", "bus")),
                                 load_profile_ref=raw.get("load_profile_ref")))

            branches = []
            for raw in items("branches"):
                if strict:
                    _reject_unknown(raw, Branch, "branch")
                branches.append(Branch(
                    id=str(_require(raw, "id", "branch")),
                    from_bus=str(_require(raw, "from_bus", "branch")),
                    to_bus=str(_require(raw, "to_bus", "branch")),
                    reactance_pu=float(_require(raw, "reactance_pu", "branch")),
                    flow_limit_mw=float(_require(raw, "flow_limit_mw", "branch")),
                    is_candidate_pt=bool(raw.get("is_candidate_pt", False)),
                ))

            gens = []
            for raw in items("thermal_gens"):
                if strict:
                    _reject_unknown(raw, ThermalGen, "thermal_gen")
                status = raw.get("initial_status", "offline")
                if isinstance(status, str):
                    if status not in ("committed", "offline"):
                        raise SchemaError(f"thermal_gen: initial_status must be committed|offline, got {status!r}")
                    status = status == "committed"
                ramp = raw.get("ramp_mw_per_interval")
                gens.append(ThermalGen(
                    id=str(_require(raw, "id", "thermal_gen")),
                    bus=str(_require(raw, "bus", "thermal_gen")),
                    p_min_mw=float(_require(raw, "p_min_mw", "thermal_gen")),
                    p_max_mw=float(_require(raw, "p_max_mw", "thermal_gen")),
                    cost_linear_per_mwh=float(_require(raw, "cost_linear_per_mwh", "thermal_gen")),
                    ramp_mw_per_interval=None if ramp is None else float(ramp),
                    cost_no_load_per_interval=float(raw.get("cost_no_load_per_interval", 0.0)),
                    cost_startup=float(raw.get("cost_startup", 0.0)),
                    initial_status=bool(status),
                    initial_output_mw=float(raw.get("initial_output_mw", 0.0)),
                ))

            renewables = []
            for raw in items("renewables"):
                if strict:
                    _reject_unknown(raw, RenewableUnit, "renewable")
                kind = _require(raw, "kind", "renewable")
                if kind not in (k.value for k in RenewableKind):
                    raise SchemaError(f"renewable: kind must be solar|wind, got {kind!r}")
                renewables.append(RenewableUnit(
                    id=str(_require(raw, "id", "renewable")),
                    bus=str(_require(raw, "bus", "renewable")),
                    kind=RenewableKind(kind),
                    base_profile_mw=tuple(_require(raw, "base_profile_mw", "renewable")),
                ))

            storages = []
            for raw in items("storages"):
                if strict:
                    _reject_unknown(raw, StorageUnit, "storage")
                terminal = raw.get("terminal_energy_min_mwh")
                storages.append(StorageUnit(
                    id=str(_require(raw, "id", "storage")),
                    bus=str(_require(raw, "bus", "storage")),
                    e_min_mwh=float(_require(raw, "e_min_mwh", "storage")),
                    e_max_mwh=float(_require(raw, "e_max_mwh", "storage")),
                    p_charge_max_mw=float(_require(raw, "p_charge_max_mw", "storage")),
                    p_discharge_max_mw=float(_require(raw, "p_discharge_max_mw", "storage")),
                    eta_charge=float(raw.get("eta_charge", 1.0)),
                    eta_discharge=float(raw.get("eta_discharge", 1.0)),
                    initial_energy_mwh=float(raw.get("initial_energy_mwh", 0.0)),
                    terminal_energy_min_mwh=None if terminal is None else float(terminal),
                ))

            pairs = []
            for raw in items("vtl_pairs"):
                if strict:
                    _reject_unknown(raw, VtlPair, "vtl_pair")
                pairs.append(VtlPair(
                    id=str(_require(raw, "id", "vtl_pair")),
                    storage_ids=tuple(str(s) for s in _require(raw, "storage_ids", "vtl_pair")),
                    spanned_branch=raw.get("spanned_branch"),
                ))

            profiles = []
            for raw in items("load_profiles"):
                if strict:
                    _reject_unknown(raw, LoadProfile, "load_profile")
                profiles.append(LoadProfile(
                    bus=str(_require(raw, "bus", "load_profile")),
                    demand_mw=tuple(_require(raw, "demand_mw", "load_profile")),
                    id=raw.get("id"),
                ))

            raw_opts = data.get("options", {}) or {}
            if strict:
                _reject_unknown(raw_opts, CaseOptions, "options")
            defaults = CaseOptions()
            options = CaseOptions(
                interval_hours=float(raw_opts.get("interval_hours", defaults.interval_hours)),
                penalty_solar_per_mwh=float(raw_opts.get("penalty_solar_per_mwh", defaults.penalty_solar_per_mwh)),
                penalty_wind_per_mwh=float(raw_opts.get("penalty_wind_per_mwh", defaults.penalty_wind_per_mwh)),
                reference_bus=raw_opts.get("reference_bus"),
                congestion_epsilon=float(raw_opts.get("congestion_epsilon", defaults.congestion_epsilon)),
                base_mva=float(raw_opts.get("base_mva", defaults.base_mva)),
            )
        except (TypeError, ValueError) as e:
            raise SchemaError(f"case: malformed value: {e}") from e

        return cls(
            buses=tuple(buses), branches=tuple(branches), thermal_gens=tuple(gens),
            renewables=tuple(renewables), storages=tuple(storages), vtl_pairs=tuple(pairs),
            load_profiles=tuple(profiles), options=options, name=str(data.get("name", "case")),
        )
