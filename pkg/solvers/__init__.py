"""Solver backends for the SCUC toolkit."""

from .base import BackendResult, SolverBackend, SolverOptions, SolveStatus
from .highs import ScipyHighsBackend
from .pyomo_backend import PyomoBackend

# Registry used by gateway.get_backend
BACKEND_CLASSES = {
    ScipyHighsBackend.name: ScipyHighsBackend,
    PyomoBackend.name: PyomoBackend,
}

__all__ = [
    "BACKEND_CLASSES",
    "BackendResult",
    "PyomoBackend",
    "ScipyHighsBackend",
    "SolveStatus",
    "SolverBackend",
    "SolverOptions",
]
