"""Error types raised by the SCUC toolkit."""

from typing import Optional


class ScucError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(ScucError):
    """A persisted document does not match its declared schema."""


class InvalidCase(ScucError):
    """A case failed structural validation."""

    def __init__(self, report, message: Optional[str] = None):
        self.report = report
        if message is None:
            first = report.issues[0] if report.issues else None
            message = f"case is not well-formed ({len(report.issues)} issue(s))"
            if first is not None:
                message += f"; first: {first}"
        super().__init__(message)


class VariantPrerequisiteMissing(ScucError):
    """The requested model variant needs an entity kind the case lacks."""

    def __init__(self, variant: str, entity_kind: str):
        self.variant = variant
        self.entity_kind = entity_kind
        super().__init__(f"variant {variant!r} requires at least one {entity_kind}")


class BadProbabilities(ScucError):
    """Scenario probabilities have the wrong length, sign or sum."""


class ScenarioCaseMismatch(ScucError):
    """A scenario set does not cover the renewable units or horizon of a case."""


class IndexingError(ScucError):
    """A model references a variable or index that does not exist."""


class DimensionMismatch(ScucError):
    """A solution's shape disagrees with the case or scenario set."""


class BackendUnavailable(ScucError):
    """The configured solver backend cannot be loaded."""


class NumericFailure(ScucError):
    """The solver failed for numerical reasons (or reported unboundedness)."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class LPInfeasibleUnderFixing(ScucError):
    """The LP obtained by fixing every binary variable is infeasible."""


class ZeroProbability(ScucError):
    """An LMP cannot be de-weighted for a scenario with zero probability."""


class TooManyBinaries(ScucError):
    """Exhaustive enumeration was requested on too many binary variables."""

    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"model has {count} binary variables, enumeration limit is {limit}")


class BaselineMissing(ScucError):
    """The comparison baseline label is not among the reports."""


class MixedProvenance(ScucError):
    """Reports being compared come from different cases or scenario sets."""


class EEVInfeasible(ScucError):
    """The expected-value commitment is infeasible for some scenario."""


class StochasticBoundsViolation(ScucError):
    """WS <= RP <= EEV does not hold within tolerance."""


class ModelInfeasible(ScucError):
    """A solve that a computation depends on has no feasible point."""

    def __init__(self, message: str, family: Optional[str] = None):
        self.family = family
        if family:
            message = f"{message} (feasible without {family} constraints)"
        super().__init__(message)
