"""Logging setup for vtl-scuc: one package logger, stderr console, optional file."""

import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional, Union

LOGGER_NAME = "vtl_scuc"

CONSOLE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
FILE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Solver and plotting front-ends log heavily at INFO
QUIET_LOGGERS = ("pyomo", "matplotlib", "highspy")


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Return the package logger or one of its children."""
    return logging.getLogger(f"{LOGGER_NAME}.{name}" if name else LOGGER_NAME)


def _resolve_level(level: Union[str, int]) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(level.upper())
    if not isinstance(resolved, int):
        raise ValueError(f"unknown log level {level!r}")
    return resolved


def _handler(handler: logging.Handler, fmt: str) -> logging.Handler:
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(fmt, datefmt=DATE_FORMAT))
    return handler


def setup_logging(log_level: Union[str, int] = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the package logger and return it.

    Console lines go to stderr; stdout is left to the CLI summaries. Calling
    this again replaces the previous handlers.

    Args:
        log_level: level name (DEBUG, INFO, ...) or number
        log_file: optional path; parent directories are created

    Raises:
        ValueError: unknown level name
    """
    logger = get_logger()
    logger.setLevel(_resolve_level(log_level))

    for old in list(logger.handlers):
        logger.removeHandler(old)
        try:
            old.close()
        except Exception:
            pass

    logger.addHandler(_handler(logging.StreamHandler(sys.stderr), CONSOLE_FORMAT))
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.addHandler(_handler(logging.FileHandler(path, encoding="utf-8"), FILE_FORMAT))

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    return logger


class ContextLogger:
    """Prefixes every message with ``[key=value | ...]`` run context."""

    def __init__(self, logger: logging.Logger, context: Dict[str, Any]):
        self.logger = logger
        self.context = dict(context)

    @property
    def prefix(self) -> str:
        return "[" + " | ".join(f"{k}={v}" for k, v in self.context.items()) + "]"

    def log(self, level: int, msg: str, *args, **kwargs) -> None:
        self.logger.log(level, f"{self.prefix} {msg}", *args, **kwargs)

    def debug(self, msg: str, *args, **kwargs) -> None:
        self.log(logging.DEBUG, msg, *args, **kwargs)

    def info(self, msg: str, *args, **kwargs) -> None:
        self.log(logging.INFO, msg, *args, **kwargs)

    def warning(self, msg: str, *args, **kwargs) -> None:
        self.log(logging.WARNING, msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        self.log(logging.ERROR, msg, *args, **kwargs)


class PerformanceLogger:
    """
    Times a block and logs its start and end.

    ``elapsed`` holds the duration in seconds after the block exits; a failing
    block is logged at ERROR and the exception propagates.
    """

    def __init__(self, logger: Union[logging.Logger, ContextLogger], operation: str, level: int = logging.INFO):
        self.logger = logger
        self.operation = operation
        self.level = level
        self.elapsed = 0.0
        self._start = 0.0

    def __enter__(self) -> "PerformanceLogger":
        self._start = time.perf_counter()
        self.logger.log(self.level, f"Starting {self.operation}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.elapsed = time.perf_counter() - self._start
        if exc_type is None:
            self.logger.log(self.level, f"Completed {self.operation} in {self.elapsed:.2f}s")
        else:
            self.logger.error(f"{self.operation} failed after {self.elapsed:.2f}s: {exc_type.__name__}: {exc_val}")
        return False
