"""
Bundled cases.

Small hand-checkable systems used by the tests and the CLI, plus a 24-bus
analogue of the IEEE RTS-1996 one-area system with renewables, a candidate
line and one storage pair. The 24-bus data is a best-effort reconstruction
(costs, renewable siting and storage sizing are assumptions) and is not an
authoritative data set.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

from logging_config import get_logger
from models import (
    Branch,
    Bus,
    CaseFile,
    CaseOptions,
    LoadProfile,
    RenewableKind,
    RenewableUnit,
    StorageUnit,
    ThermalGen,
    VtlPair,
)
from scenarios import ScenarioSet, SigmaSchedule, generate_scenarios

BUILTIN_PREFIX = "builtin:"

logger = get_logger("cases")


@dataclass(frozen=True)
class BundledCase:
    """A case together with the scenarios (or scenario probabilities) it ships with."""

    case: CaseFile
    scenarios: Optional[ScenarioSet] = None
    probabilities: Optional[Tuple[float, ...]] = None
    seed: int = 0

    def scenario_set(
        self,
        count: Optional[int] = None,
        seed: Optional[int] = None,
        schedule: Optional[SigmaSchedule] = None,
    ) -> ScenarioSet:
        """
        Scenarios for this case.

        Hand-authored scenarios are returned as is when no count is asked
        for; otherwise forecast-error scenarios are drawn around the base
        profiles with the bundled probabilities when their count matches.
        """
        if self.scenarios is not None and count is None:
            return self.scenarios
        if count is None:
            count = len(self.probabilities) if self.probabilities else 1
        probs = self.probabilities if self.probabilities and len(self.probabilities) == count else None
        return generate_scenarios(
            self.case, schedule or SigmaSchedule(), count, self.seed if seed is None else seed, probs
        )


def _fixed(count: int, *profiles: Dict[str, Sequence[float]], probabilities=None) -> ScenarioSet:
    probs = probabilities or tuple(1.0 / count for _ in range(count))
    return ScenarioSet(tuple(probs), tuple(profiles), {"generator": "hand-authored"})


def single_bus(
    horizon: int = 24,
    load_mw: float = 100.0,
    cost: float = 10.0,
    no_load: float = 0.0,
    startup: float = 0.0,
    p_min: float = 0.0,
    p_max: float = 200.0,
) -> BundledCase:
    """One bus, one thermal unit, flat load, no network."""
    case = CaseFile(
        name="single_bus",
        buses=(Bus("1", load_profile_ref="1"),),
        thermal_gens=(ThermalGen("G1", "1", p_min, p_max, cost,
                                 cost_no_load_per_interval=no_load, cost_startup=startup),),
        load_profiles=(LoadProfile("1", (load_mw,) * horizon),),
    )
    return BundledCase(case, _fixed(1, {}))


def two_bus_congested(
    horizon: int = 2,
    line_limit_mw: float = 100.0,
    load_mw: float = 150.0,
    wind_scenarios: Optional[Sequence[Sequence[float]]] = None,
) -> BundledCase:
    """
    Cheap unit at bus 1 (10 $/MWh), expensive unit at bus 2 (50 $/MWh),
    load at bus 2 behind a single line.

    With the default 100 MW limit the line binds and prices separate at 10
    and 50 $/MWh. ``wind_scenarios`` adds a wind unit at bus 2 with one
    profile per (equiprobable) scenario.
    """
    renewables = ()
    scenarios = _fixed(1, {})
    if wind_scenarios:
        profiles = [tuple(float(v) for v in w) for w in wind_scenarios]
        renewables = (RenewableUnit("W2", "2", RenewableKind.WIND, profiles[0]),)
        scenarios = _fixed(len(profiles), *({"W2": p} for p in profiles))
    case = CaseFile(
        name="two_bus_congested",
        buses=(Bus("1"), Bus("2", load_profile_ref="2")),
        branches=(Branch("L12", "1", "2", 0.1, line_limit_mw),),
        thermal_gens=(
            ThermalGen("GA", "1", 0.0, 200.0, 10.0),
            ThermalGen("GB", "2", 0.0, 200.0, 50.0),
        ),
        renewables=renewables,
        load_profiles=(LoadProfile("2", (load_mw,) * horizon),),
    )
    return BundledCase(case, scenarios)


def storage_pair(horizon: int = 2) -> BundledCase:
    """
    Two buses joined by an 80 MW line, with a candidate parallel line and a
    storage at each end forming one VTL pair, so every variant applies.

    Wind at bus 1 produces 150 MW in the first interval of scenario 0 (more
    than the line can carry) and 50 MW in scenario 1, which needs no
    curtailment in any variant. Later intervals are windless.
    """
    load = (100.0,) * horizon
    high = (150.0,) + (0.0,) * (horizon - 1)
    low = (50.0,) + (0.0,) * (horizon - 1)
    storage = dict(e_min_mwh=0.0, e_max_mwh=100.0, p_charge_max_mw=50.0, p_discharge_max_mw=50.0,
                   eta_charge=0.95, eta_discharge=0.95, initial_energy_mwh=0.0)
    case = CaseFile(
        name="storage_pair",
        buses=(Bus("1"), Bus("2", load_profile_ref="2")),
        branches=(
            Branch("L12", "1", "2", 0.1, 80.0),
            Branch("PT12", "1", "2", 0.1, 80.0, is_candidate_pt=True),
        ),
        thermal_gens=(
            ThermalGen("G2", "2", 0.0, 200.0, 50.0, initial_status=True, initial_output_mw=100.0),
        ),
        renewables=(RenewableUnit("W1", "1", RenewableKind.WIND, high),),
        storages=(StorageUnit("E1", "1", **storage), StorageUnit("E2", "2", **storage)),
        vtl_pairs=(VtlPair("VT1", ("E1", "E2"), spanned_branch="L12"),),
        load_profiles=(LoadProfile("2", load),),
    )
    return BundledCase(case, _fixed(2, {"W1": high}, {"W1": low}), probabilities=(0.5, 0.5))


def stochastic_three_bus(horizon: int = 6) -> BundledCase:
    """
    Three buses where the stochastic commitment differs from the
    expected-value one.

    G1 (bus 1) is cheap but must run at 60 MW or more; G2 (bus 2) is dear
    with a no-load cost but can run down to zero. Load of 100 MW and a wind
    unit sit at bus 3; wind is 0 MW in scenario 0 and 80 MW in scenario 1.
    Per interval: WS = 850, RP = 1900 (commit G2) and EEV = 10800 (the
    expected 40 MW of wind commits G1, which then curtails 40 MW in
    scenario 1).
    """
    calm, windy = (0.0,) * horizon, (80.0,) * horizon
    case = CaseFile(
        name="stochastic_three_bus",
        buses=(Bus("1"), Bus("2"), Bus("3", load_profile_ref="3")),
        branches=(
            Branch("L12", "1", "2", 0.1, 1000.0),
            Branch("L23", "2", "3", 0.1, 1000.0),
            Branch("L13", "1", "3", 0.1, 1000.0),
        ),
        thermal_gens=(
            ThermalGen("G1", "1", 60.0, 120.0, 10.0),
            ThermalGen("G2", "2", 0.0, 120.0, 30.0, cost_no_load_per_interval=100.0),
        ),
        renewables=(RenewableUnit("W3", "3", RenewableKind.WIND, (40.0,) * horizon),),
        load_profiles=(LoadProfile("3", (100.0,) * horizon),),
        options=CaseOptions(penalty_wind_per_mwh=500.0),
    )
    return BundledCase(case, _fixed(2, {"W3": calm}, {"W3": windy}), probabilities=(0.5, 0.5))


# RTS-1996 one-area topology: (from, to, reactance p.u., rating MW).
# The ties out of bus 23 are derated to 250 MW in total, so the wind site
# there is export-limited.
RTS24_BRANCHES = (
    ("1", "2", 0.0139, 175), ("1", "3", 0.2112, 175), ("1", "5", 0.0845, 175),
    ("2", "4", 0.1267, 175), ("2", "6", 0.1920, 175), ("3", "9", 0.1190, 175),
    ("3", "24", 0.0839, 400), ("4", "9", 0.1037, 175), ("5", "10", 0.0883, 175),
    ("6", "10", 0.0605, 175), ("7", "8", 0.0614, 175), ("8", "9", 0.1651, 175),
    ("8", "10", 0.1651, 175), ("9", "11", 0.0839, 400), ("9", "12", 0.0839, 400),
    ("10", "11", 0.0839, 400), ("10", "12", 0.0839, 400), ("11", "13", 0.0476, 500),
    ("11", "14", 0.0418, 500), ("12", "13", 0.0476, 500), ("12", "23", 0.0966, 75),
    ("13", "23", 0.0865, 75), ("14", "16", 0.0389, 500), ("15", "16", 0.0173, 500),
    ("15", "21", 0.0490, 500), ("15", "21", 0.0490, 500), ("15", "24", 0.0519, 500),
    ("16", "17", 0.0259, 500), ("16", "19", 0.0231, 500), ("17", "18", 0.0144, 500),
    ("17", "22", 0.1053, 500), ("18", "21", 0.0259, 500), ("18", "21", 0.0259, 500),
    ("19", "20", 0.0396, 500), ("19", "20", 0.0396, 500), ("20", "23", 0.0216, 50),
    ("20", "23", 0.0216, 50), ("21", "22", 0.0678, 500),
)

# Peak demand per bus (MW) before scaling
RTS24_PEAK_LOAD = {
    "1": 108, "2": 97, "3": 180, "4": 74, "5": 71, "6": 136, "7": 125, "8": 171, "9": 175,
    "10": 195, "13": 265, "14": 194, "15": 317, "16": 100, "18": 333, "19": 181, "20": 128,
}

# Summer weekday, percent of peak, hours 0-23
SUMMER_WEEKDAY_SHAPE = (
    64, 60, 58, 56, 56, 58, 64, 76, 87, 95, 99, 100,
    99, 100, 100, 97, 96, 96, 93, 92, 92, 93, 87, 72,
)

SOLAR_SHAPE = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.10, 0.25, 0.42, 0.58, 0.70, 0.78,
    0.82, 0.80, 0.74, 0.63, 0.48, 0.30, 0.14, 0.04, 0.0, 0.0, 0.0, 0.0,
)
WIND_SHAPE = (
    0.52, 0.55, 0.57, 0.58, 0.56, 0.53, 0.48, 0.43, 0.38, 0.34, 0.31, 0.29,
    0.28, 0.28, 0.30, 0.33, 0.36, 0.40, 0.44, 0.48, 0.51, 0.53, 0.54, 0.53,
)

# Aggregated units; the coal units at buses 2, 15, 16 and 23 are gone.
# (bus, p_min, p_max, $/MWh, no-load $/h, startup $, ramp MW/h, initial output MW or None)
RTS24_UNITS = (
    ("1", 62.0, 192.0, 20.0, 150.0, 1500.0, 100.0, 100.0),
    ("2", 16.0, 40.0, 130.0, 50.0, 100.0, 40.0, None),
    ("7", 75.0, 300.0, 45.0, 300.0, 3000.0, 150.0, None),
    ("13", 207.0, 591.0, 40.0, 600.0, 5000.0, 300.0, 300.0),
    ("15", 12.0, 60.0, 120.0, 60.0, 200.0, 60.0, None),
    ("18", 100.0, 400.0, 6.0, 0.0, 40000.0, 280.0, 400.0),
    ("21", 100.0, 400.0, 6.0, 0.0, 40000.0, 280.0, 400.0),
    ("22", 0.0, 300.0, 1.0, 0.0, 0.0, 300.0, 150.0),
)

RTS24_PROBABILITIES = (0.25, 0.35, 0.40)

# Renewable output multiplier per bundled scenario (nominal, windy, very windy)
RTS24_RENEWABLE_SCALE = (1.0, 1.3, 1.7)


def rts24_vtl(
    load_scale: float = 0.8,
    solar_share: float = 0.40,
    wind_share: float = 0.30,
    corridor_limit_mw: float = 200.0,
    seed: int = 2024,
    renewable_scale: Sequence[float] = RTS24_RENEWABLE_SCALE,
) -> BundledCase:
    """
    24-bus analogue with solar at buses 2 and 16, wind at 15 and 23, a
    candidate line parallel to 11-14 and storages at 11 and 14 forming one
    VTL pair across that corridor.

    Renewable base peaks are ``solar_share`` and ``wind_share`` of the
    scaled system peak, split evenly between the two sites. The 11-14
    rating is lowered to ``corridor_limit_mw`` so the corridor congests.

    The bundled scenarios are forecast-error draws (``seed``) with scenario
    ``s`` scaled by ``renewable_scale[s]``; asking for an explicit count draws
    unscaled scenarios around the base profiles.
    """
    hours = len(SUMMER_WEEKDAY_SHAPE)
    bus_ids = [str(n) for n in range(1, 25)]
    buses = tuple(Bus(b, load_profile_ref=b if b in RTS24_PEAK_LOAD else None) for b in bus_ids)
    loads = tuple(
        LoadProfile(b, tuple(round(peak * load_scale * pct / 100.0, 4) for pct in SUMMER_WEEKDAY_SHAPE))
        for b, peak in RTS24_PEAK_LOAD.items()
    )

    branches = []
    for i, (f, t, x, rating) in enumerate(RTS24_BRANCHES, start=1):
        limit = corridor_limit_mw if (f, t) == ("11", "14") else float(rating)
        branches.append(Branch(f"L{i}", f, t, x, limit))
    branches.append(Branch("PT11-14", "11", "14", 0.0418, corridor_limit_mw, is_candidate_pt=True))

    gens = tuple(
        ThermalGen(
            f"G{bus}", bus, p_min, p_max, cost,
            ramp_mw_per_interval=ramp,
            cost_no_load_per_interval=no_load,
            cost_startup=su,
            initial_status=p0 is not None,
            initial_output_mw=p0 or 0.0,
        )
        for bus, p_min, p_max, cost, no_load, su, ramp, p0 in RTS24_UNITS
    )

    peak = sum(RTS24_PEAK_LOAD.values()) * load_scale
    solar_site = peak * solar_share / 2
    wind_site = peak * wind_share / 2
    renewables = (
        RenewableUnit("PV2", "2", RenewableKind.SOLAR, tuple(round(solar_site * f, 4) for f in SOLAR_SHAPE)),
        RenewableUnit("PV16", "16", RenewableKind.SOLAR, tuple(round(solar_site * f, 4) for f in SOLAR_SHAPE)),
        RenewableUnit("WT15", "15", RenewableKind.WIND, tuple(round(wind_site * f, 4) for f in WIND_SHAPE)),
        RenewableUnit("WT23", "23", RenewableKind.WIND, tuple(round(wind_site * f, 4) for f in WIND_SHAPE)),
    )

    storage = dict(e_min_mwh=30.0, e_max_mwh=300.0, p_charge_max_mw=100.0, p_discharge_max_mw=100.0,
                   eta_charge=0.95, eta_discharge=0.95, initial_energy_mwh=150.0,
                   terminal_energy_min_mwh=150.0)
    case = CaseFile(
        name="rts24_vtl",
        buses=buses,
        branches=tuple(branches),
        thermal_gens=gens,
        renewables=renewables,
        storages=(StorageUnit("ES11", "11", **storage), StorageUnit("ES14", "14", **storage)),
        vtl_pairs=(VtlPair("VT11-14", ("ES11", "ES14"), spanned_branch="L19"),),
        load_profiles=loads,
        options=CaseOptions(penalty_solar_per_mwh=500.0, penalty_wind_per_mwh=500.0),
    )
    logger.debug(f"Built rts24_vtl analogue over {hours} hours (peak {peak:.1f} MW)")
    drawn = generate_scenarios(case, SigmaSchedule(), len(RTS24_PROBABILITIES), seed, RTS24_PROBABILITIES)
    return BundledCase(case, drawn.scaled(renewable_scale), probabilities=RTS24_PROBABILITIES, seed=seed)


BUILTIN_CASES: Dict[str, Callable[..., BundledCase]] = {
    "single_bus": single_bus,
    "two_bus_congested": two_bus_congested,
    "storage_pair": storage_pair,
    "stochastic_three_bus": stochastic_three_bus,
    "rts24_vtl": rts24_vtl,
}


def is_builtin(spec: str) -> bool:
    return spec.startswith(BUILTIN_PREFIX)


def load_builtin(spec: str) -> BundledCase:
    """Resolve ``builtin:<name>`` (or a bare name) to a bundled case."""
    name = spec[len(BUILTIN_PREFIX):] if is_builtin(spec) else spec
    factory = BUILTIN_CASES.get(name)
    if factory is None:
        raise KeyError(f"unknown bundled case {name!r} (expected one of {', '.join(sorted(BUILTIN_CASES))})")
    return factory()
