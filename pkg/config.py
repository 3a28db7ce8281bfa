"""Configuration management for the SCUC toolkit."""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple


def _env_bool(name: str, default: str = "false") -> bool:
    """Parse common boolean environment values."""
    return os.getenv(name, default).lower() in ("true", "1", "yes", "on")


def _env_float(name: str) -> Optional[float]:
    """A float from the environment, or None when the variable is unset or empty."""
    value = os.getenv(name, "").strip()
    return float(value) if value else None


@dataclass
class AppConfig:
    """Application-wide configuration."""

    # Solver backend (configuration key ``solver.backend``)
    solver_backend: str = os.getenv("SCUC_SOLVER_BACKEND", "highs")
    mip_gap: float = float(os.getenv("SCUC_MIP_GAP", "1e-4"))  # large runs
    time_limit_seconds: float = float(os.getenv("SCUC_TIME_LIMIT", "600"))
    threads: int = int(os.getenv("SCUC_THREADS", "1"))
    deterministic: bool = _env_bool("SCUC_DETERMINISTIC", "true")

    # Verification
    oracle_binary_limit: int = int(os.getenv("SCUC_ORACLE_BINARY_LIMIT", "20"))
    feasibility_tolerance: float = float(os.getenv("SCUC_FEASIBILITY_TOL", "1e-6"))

    # Concurrency
    max_concurrent_solves: int = int(os.getenv("SCUC_MAX_CONCURRENT_SOLVES", "1"))

    # Reporting; an unset congestion epsilon defers to the case options
    congestion_epsilon: Optional[float] = _env_float("SCUC_CONGESTION_EPS")
    lmp_convention: str = os.getenv("SCUC_LMP_CONVENTION", "expected")
    output_dir: str = os.getenv("SCUC_OUTPUT_DIR", "runs")
    csv_float_format: str = os.getenv("SCUC_CSV_FLOAT_FORMAT", "%.6f")

    # Persistence
    strict_schemas: bool = _env_bool("SCUC_STRICT_SCHEMAS", "true")


@dataclass
class ScenarioSource:
    """Where a run gets its scenarios: a file, or generation parameters."""

    path: Optional[str] = None
    count: Optional[int] = None
    seed: Optional[int] = None
    probabilities: Optional[Tuple[float, ...]] = None

    @property
    def is_file(self) -> bool:
        return self.path is not None

    @property
    def is_generated(self) -> bool:
        return self.count is not None


@dataclass
class RunConfig:
    """Everything one CLI run needs."""

    case_path: str
    variant: str
    scenarios: ScenarioSource
    output_dir: str = "runs"
    solver_backend: str = ""
    mip_gap: float = 1e-4
    time_limit_seconds: float = 600.0
    threads: Optional[int] = None
    deterministic: bool = True
    lmp_convention: str = "expected"
    congestion_epsilon: Optional[float] = None
    dump_model_path: Optional[str] = None

    def validate(self) -> None:
        """Raise ValueError if the config cannot drive a run."""
        src = self.scenarios
        if src.is_file == src.is_generated:
            raise ValueError("exactly one scenario source (file or generate) is required")
        if src.is_generated and (src.count is None or src.count < 1):
            raise ValueError("scenario count must be a positive integer")
        if self.lmp_convention not in ("expected", "unweighted"):
            raise ValueError(f"unknown LMP convention {self.lmp_convention!r}")
        if self.congestion_epsilon is not None and not 0 < self.congestion_epsilon <= 0.01:
            raise ValueError("congestion epsilon must be in (0, 0.01]")

        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ValueError(f"output directory {out} is not writable")


# Initialize app configuration
APP_CONFIG = AppConfig()
