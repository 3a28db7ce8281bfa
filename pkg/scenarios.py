"""Renewable forecast-error scenarios: synthesis, validation and (de)serialization."""

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from exceptions import BadProbabilities, ScenarioCaseMismatch, SchemaError
from logging_config import get_logger
from models import CaseFile, RenewableKind
from validation import ValidationReport

SCENARIO_SCHEMA = "vtl-scuc-scen/1"
PROBABILITY_TOLERANCE = 1e-9
GENERATOR_NAME = "numpy-pcg64/box-muller"

logger = get_logger("scenarios")


def _default_solar() -> Tuple[float, ...]:
    sigma = []
    for hour in range(24):
        if hour >= 20 or hour < 5:
            sigma.append(0.0)
        elif 9 <= hour < 16:
            sigma.append(0.05)
        else:
            sigma.append(0.02)
    return tuple(sigma)


@dataclass(frozen=True)
class SigmaSchedule:
    """Relative standard deviation of the forecast error, per hour and per kind."""

    solar: Tuple[float, ...] = field(default_factory=_default_solar)
    wind: Tuple[float, ...] = (0.1,) * 24

    def __post_init__(self):
        object.__setattr__(self, "solar", tuple(float(v) for v in self.solar))
        object.__setattr__(self, "wind", tuple(float(v) for v in self.wind))
        for name in ("solar", "wind"):
            values = getattr(self, name)
            if not values:
                raise ValueError(f"{name} sigma schedule is empty")
            if any(v < 0 or not math.isfinite(v) for v in values):
                raise ValueError(f"{name} sigma values must be finite and >= 0")

    @classmethod
    def zero(cls, length: int = 24) -> "SigmaSchedule":
        return cls(solar=(0.0,) * length, wind=(0.0,) * length)

    def values_for(self, kind: RenewableKind) -> Tuple[float, ...]:
        return self.solar if RenewableKind(kind) is RenewableKind.SOLAR else self.wind

    def sigma_vector(self, kind: RenewableKind, horizon: int, interval_hours: float = 1.0) -> np.ndarray:
        """
        Per-interval sigma for a horizon.

        A 24-entry schedule is read by clock hour ``floor(t * interval) mod 24``;
        a schedule with exactly ``horizon`` entries is read by interval.
        """
        values = self.values_for(kind)
        if len(values) == horizon:
            return np.asarray(values, dtype=float)
        if len(values) == 24:
            hours = [int(math.floor(t * interval_hours)) % 24 for t in range(horizon)]
            return np.asarray([values[h] for h in hours], dtype=float)
        raise ScenarioCaseMismatch(
            f"{RenewableKind(kind).value} sigma schedule has {len(values)} entries; expected 24 or {horizon}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"solar": list(self.solar), "wind": list(self.wind)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SigmaSchedule":
        return cls(solar=tuple(data["solar"]), wind=tuple(data["wind"]))


@dataclass(frozen=True)
class ScenarioSet:
    """Probability-weighted renewable output profiles."""

    probabilities: Tuple[float, ...]
    profiles: Tuple[Dict[str, Tuple[float, ...]], ...]
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        object.__setattr__(
            self,
            "profiles",
            tuple({str(u): tuple(float(v) for v in values) for u, values in s.items()} for s in self.profiles),
        )

    @property
    def count(self) -> int:
        return len(self.profiles)

    @property
    def horizon(self) -> int:
        for scenario in self.profiles:
            for values in scenario.values():
                return len(values)
        return 0

    def unit_ids(self) -> Tuple[str, ...]:
        seen = {}
        for scenario in self.profiles:
            for unit in scenario:
                seen.setdefault(unit, None)
        return tuple(seen)

    def availability(self, unit_id: str, scenario: int) -> Tuple[float, ...]:
        try:
            return self.profiles[scenario][unit_id]
        except (IndexError, KeyError):
            raise ScenarioCaseMismatch(f"scenario {scenario} has no profile for unit {unit_id!r}")

    def with_probabilities(self, probabilities: Sequence[float]) -> "ScenarioSet":
        """Same profiles under different weights (not validated)."""
        if len(probabilities) != self.count:
            raise BadProbabilities(f"expected {self.count} probabilities, got {len(probabilities)}")
        return ScenarioSet(tuple(probabilities), self.profiles, dict(self.provenance))

    def subset(self, indices: Iterable[int], renormalize: bool = True) -> "ScenarioSet":
        """Scenarios at ``indices``, probabilities rescaled to sum to one by default."""
        indices = list(indices)
        probs = [self.probabilities[i] for i in indices]
        if renormalize:
            total = sum(probs)
            if total <= 0:
                raise BadProbabilities("selected scenarios have zero total probability")
            probs = [p / total for p in probs]
        provenance = dict(self.provenance, subset=indices)
        return ScenarioSet(tuple(probs), tuple(self.profiles[i] for i in indices), provenance)

    def scaled(self, factors: Sequence[float]) -> "ScenarioSet":
        """Every profile of scenario ``s`` multiplied by ``factors[s]``."""
        if len(factors) != self.count:
            raise ValueError(f"expected {self.count} scale factors, got {len(factors)}")
        if any(not math.isfinite(f) or f < 0 for f in factors):
            raise ValueError(f"scale factors must be finite and >= 0, got {list(factors)}")
        profiles = tuple(
            {u: tuple(v * f for v in values) for u, values in scenario.items()}
            for scenario, f in zip(self.profiles, factors)
        )
        provenance = dict(self.provenance, scale=[float(f) for f in factors])
        return ScenarioSet(self.probabilities, profiles, provenance)

    def expected(self) -> "ScenarioSet":
        """Single scenario holding the probability-weighted mean profiles."""
        total = sum(self.probabilities)
        mean = {}
        for unit in self.unit_ids():
            stacked = np.array([s[unit] for s in self.profiles], dtype=float)
            weights = np.asarray(self.probabilities, dtype=float) / total
            mean[unit] = tuple(float(v) for v in weights @ stacked)
        provenance = dict(self.provenance, expected_of=self.digest())
        return ScenarioSet((1.0,), (mean,), provenance)

    def digest(self) -> str:
        """SHA-256 of the canonical profile and probability content."""
        payload = json.dumps(
            {"probabilities": list(self.probabilities), "scenarios": [dict(sorted(s.items())) for s in self.profiles]},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCENARIO_SCHEMA,
            "probabilities": list(self.probabilities),
            "scenarios": [{u: list(v) for u, v in s.items()} for s in self.profiles],
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = True) -> "ScenarioSet":
        if not isinstance(data, dict):
            raise SchemaError("scenario document must be an object")
        schema = data.get("schema")
        if schema != SCENARIO_SCHEMA:
            raise SchemaError(f"unsupported scenario schema {schema!r} (expected {SCENARIO_SCHEMA!r})")
        if strict:
            unknown = sorted(set(data) - {"schema", "probabilities", "scenarios", "provenance"})
            if unknown:
                raise SchemaError(f"scenario set: unknown field(s) {', '.join(unknown)}")
        try:
            probabilities = tuple(float(p) for p in data["probabilities"])
            profiles = tuple(dict(s) for s in data["scenarios"])
        except KeyError as e:
            raise SchemaError(f"scenario set: missing required field {e.args[0]!r}") from e
        except (TypeError, ValueError) as e:
            raise SchemaError(f"scenario set: malformed value: {e}") from e
        return cls(probabilities, profiles, dict(data.get("provenance") or {}))


def box_muller(rng: np.random.Generator, shape) -> np.ndarray:
    """
    Standard normal draws from uniform pairs.

    Uses z = sqrt(-2 ln u1) * cos(2 pi u2) with u1 in (0, 1], one pair per draw,
    so outputs depend only on the PCG64 stream and not on numpy's normal sampler.
    """
    u1 = 1.0 - rng.random(shape)
    u2 = rng.random(shape)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _check_probabilities(probabilities: Optional[Sequence[float]], count: int) -> Tuple[float, ...]:
    if probabilities is None:
        return tuple(1.0 / count for _ in range(count))
    probs = tuple(float(p) for p in probabilities)
    if len(probs) != count:
        raise BadProbabilities(f"expected {count} probabilities, got {len(probs)}")
    if any(not math.isfinite(p) or p <= 0 for p in probs):
        raise BadProbabilities(f"probabilities must be positive, got {list(probs)}")
    if abs(sum(probs) - 1.0) > PROBABILITY_TOLERANCE:
        raise BadProbabilities(f"probabilities sum to {sum(probs):.12g}, not 1")
    return probs


def generate_scenarios(
    case: CaseFile,
    schedule: SigmaSchedule,
    count: int,
    seed: int,
    probabilities: Optional[Sequence[float]] = None,
) -> ScenarioSet:
    """
    Draw ``count`` scenarios of multiplicative Gaussian forecast error.

    output[s][u][t] = max(base[u][t] * (1 + sigma_kind(t) * z), 0)

    Args:
        case: Case supplying renewable units, horizon and interval length
        schedule: Per-hour sigma for solar and wind
        count: Number of scenarios (>= 1)
        seed: PCG64 seed; the same seed reproduces the set bit-for-bit
        probabilities: Optional weights; uniform when omitted

    Raises:
        BadProbabilities: wrong length, non-positive entry or sum != 1
    """
    if count < 1:
        raise ValueError("scenario count must be >= 1")
    probs = _check_probabilities(probabilities, count)

    horizon = case.horizon
    interval = case.options.interval_hours
    rng = np.random.Generator(np.random.PCG64(seed))
    units = case.renewables

    sigmas = np.array([schedule.sigma_vector(u.kind, horizon, interval) for u in units]).reshape(len(units), horizon)
    base = np.array([u.base_profile_mw for u in units], dtype=float).reshape(len(units), horizon)

    profiles = []
    for _ in range(count):
        z = box_muller(rng, (len(units), horizon))
        output = np.maximum(base * (1.0 + sigmas * z), 0.0)
        # Exact base where sigma is zero
        output = np.where(sigmas == 0.0, base, output)
        profiles.append({u.id: tuple(float(v) for v in output[i]) for i, u in enumerate(units)})

    logger.debug(f"Generated {count} scenarios for {len(units)} renewable units (seed={seed})")
    provenance = {"seed": seed, "generator": GENERATOR_NAME, "schedule": schedule.to_dict()}
    return ScenarioSet(probs, tuple(profiles), provenance)


def validate_scenario_set(scen: ScenarioSet, case: CaseFile) -> ValidationReport:
    """List probability, sign, coverage and length problems (never raises)."""
    report = ValidationReport()
    horizon = case.horizon

    if len(scen.probabilities) != scen.count:
        report.add(
            "ScenarioSet", "probabilities", "one probability per scenario",
            f"{len(scen.probabilities)} probabilities for {scen.count} scenarios",
        )
    if scen.count == 0:
        report.add("ScenarioSet", "scenarios", "at least one scenario")
    if any(not math.isfinite(p) or p <= 0 for p in scen.probabilities):
        report.add("ScenarioSet", "probabilities", "all probabilities > 0", str(list(scen.probabilities)))
    if abs(sum(scen.probabilities) - 1.0) > PROBABILITY_TOLERANCE:
        report.add("ScenarioSet", "probabilities", "probabilities sum to 1", f"sum = {sum(scen.probabilities):.12g}")

    case_units = {u.id for u in case.renewables}
    for s, scenario in enumerate(scen.profiles):
        for unit in sorted(case_units - set(scenario)):
            report.add("ScenarioSet", f"s{s}", "every renewable unit covered", f"missing {unit!r}")
        for unit in sorted(set(scenario) - case_units):
            report.add("ScenarioSet", f"s{s}", "no unknown units", f"unknown {unit!r}")
        for unit, values in scenario.items():
            if len(values) != horizon:
                report.add("ScenarioSet", f"s{s}", "length = T", f"{unit}: {len(values)} != {horizon}")
            if any(v < 0 or not math.isfinite(v) for v in values):
                report.add("ScenarioSet", f"s{s}", "outputs >= 0", unit)
    return report


def require_matching(scen: ScenarioSet, case: CaseFile) -> None:
    """Raise ScenarioCaseMismatch if coverage or lengths disagree with the case."""
    report = validate_scenario_set(scen, case)
    structural = [i for i in report.issues if i.rule in ("every renewable unit covered", "no unknown units", "length = T")]
    if structural:
        raise ScenarioCaseMismatch(str(structural[0]))
