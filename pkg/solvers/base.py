"""Backend contract every MILP/LP solver adapter implements."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from logging_config import ContextLogger, get_logger
from milp import MilpModel


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"  # incumbent found, gap not closed
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"  # stopped without an incumbent

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)


@dataclass(frozen=True)
class SolverOptions:
    """Options mapped one-to-one onto the backend's parameters."""

    relative_mip_gap: float = 1e-6
    time_limit_seconds: float = 600.0
    threads: Optional[int] = None
    deterministic_mode: bool = True

    def __post_init__(self):
        if self.relative_mip_gap < 0:
            raise ValueError("relative_mip_gap must be >= 0")
        if self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be > 0")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class BackendResult:
    """What a backend reports back for one solve."""

    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    mip_gap: Optional[float] = None
    row_duals: Optional[np.ndarray] = None  # d objective / d row bound, LP only
    message: str = ""
    seconds: float = 0.0


class SolverBackend(ABC):
    """Abstract base class for solver adapters."""

    #: registry key, e.g. "highs" or "pyomo"
    name: str = ""

    def __init__(self, solver_name: str = "", logger: Optional[logging.Logger] = None):
        """
        Initialize backend.

        Args:
            solver_name: Underlying solver for multi-solver front-ends
            logger: Logger instance (defaults to the package child logger)
        """
        self.solver_name = solver_name
        self.logger = ContextLogger(logger or get_logger("solvers"), {"backend": self.label})

    @property
    def label(self) -> str:
        return f"{self.name}:{self.solver_name}" if self.solver_name else self.name

    @classmethod
    def available(cls, solver_name: str = "") -> bool:
        """Whether the backend can run in this environment."""
        return True

    @abstractmethod
    def solve_milp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        """Solve the model with its integrality restrictions."""
        pass

    @abstractmethod
    def solve_lp(self, model: MilpModel, options: SolverOptions) -> BackendResult:
        """Solve the continuous model and report a dual for every row."""
        pass
