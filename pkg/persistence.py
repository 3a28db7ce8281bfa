"""Persistence layer for cases, scenario sets, solutions, reports and run manifests."""

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from builder import SOLUTION_SCHEMA, Solution
from config import APP_CONFIG
from exceptions import SchemaError
from metrics import REPORT_SCHEMA, MetricsReport
from models import CaseFile
from scenarios import ScenarioSet

MANIFEST_SCHEMA = "vtl-scuc-manifest/1"
METRICS_SCHEMA = REPORT_SCHEMA

PathLike = Union[str, Path]


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_digest(data: Any) -> str:
    """SHA-256 of a document's canonical JSON form."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def case_digest(case: CaseFile) -> str:
    return content_digest(case.to_dict())


def file_digest(path: PathLike) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            sha.update(chunk)
    return sha.hexdigest()


@dataclass
class RunManifest:
    """What went into a run and what came out, enough to reproduce it."""

    command: str
    variant: str
    label: str
    case_source: str
    case_sha256: str
    scenarios_source: str
    scenarios_sha256: str
    seed: Optional[int] = None
    solver_backend: str = ""
    solver_options: Dict[str, Any] = field(default_factory=dict)
    lmp_convention: str = "expected"
    congestion_epsilon: float = 1e-4
    status: str = ""
    objective: Optional[float] = None
    infeasible_family: Optional[str] = None
    verification_failures: List[str] = field(default_factory=list)
    wall_seconds: float = 0.0
    created_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    files: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"schema": MANIFEST_SCHEMA, **asdict(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = True) -> "RunManifest":
        if data.get("schema") != MANIFEST_SCHEMA:
            raise SchemaError(f"unsupported manifest schema {data.get('schema')!r} (expected {MANIFEST_SCHEMA!r})")
        body = {k: v for k, v in data.items() if k != "schema"}
        unknown = sorted(set(body) - set(cls.__dataclass_fields__))
        if unknown and strict:
            raise SchemaError(f"manifest: unknown field(s) {', '.join(unknown)}")
        try:
            return cls(**{k: v for k, v in body.items() if k in cls.__dataclass_fields__})
        except TypeError as e:
            raise SchemaError(f"manifest: {e}") from e


class PersistenceManager:
    """Reads and writes every versioned artifact; all writes are atomic."""

    def __init__(self, logger: logging.Logger, strict: Optional[bool] = None):
        """
        Initialize persistence manager.

        Args:
            logger: Logger instance
            strict: Reject unknown fields (defaults to SCUC_STRICT_SCHEMAS)
        """
        self.logger = logger
        self.strict = APP_CONFIG.strict_schemas if strict is None else strict

    # Raw I/O

    def write_text(self, path: PathLike, text: str) -> Path:
        """Write through a temp file in the destination directory, then rename over the target."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        self.logger.debug(f"Wrote {path}")
        return path

    def write_json(self, path: PathLike, data: Any) -> Path:
        return self.write_text(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")

    def read_json(self, path: PathLike, what: str = "document") -> Any:
        """
        Parse a JSON file.

        Raises:
            FileNotFoundError: the file does not exist
            SchemaError: the file is not valid JSON
        """
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            content = f.read()
        if not content.strip():
            raise SchemaError(f"{what} file {path} is empty")
        try:
            return json.loads(content)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{what} file {path} is not valid JSON: {e}") from e

    # Cases

    def load_case(self, path: PathLike) -> CaseFile:
        case = CaseFile.from_dict(self.read_json(path, "case"), strict=self.strict)
        self.logger.info(f"Loaded case {case.name!r}: {len(case.buses)} buses, T={case.horizon}")
        return case

    def save_case(self, path: PathLike, case: CaseFile) -> Path:
        return self.write_json(path, case.to_dict())

    # Scenarios

    def load_scenarios(self, path: PathLike) -> ScenarioSet:
        scen = ScenarioSet.from_dict(self.read_json(path, "scenario"), strict=self.strict)
        self.logger.info(f"Loaded {scen.count} scenario(s) from {path}")
        return scen

    def save_scenarios(self, path: PathLike, scen: ScenarioSet) -> Path:
        return self.write_json(path, scen.to_dict())

    # Solutions

    def load_solution(self, path: PathLike) -> Solution:
        data = self.read_json(path, "solution")
        if not isinstance(data, dict) or data.get("schema") != SOLUTION_SCHEMA:
            found = data.get("schema") if isinstance(data, dict) else None
            raise SchemaError(f"unsupported solution schema {found!r} (expected {SOLUTION_SCHEMA!r})")
        return Solution.from_dict(data, strict=self.strict)

    def save_solution(self, path: PathLike, sol: Solution) -> Path:
        return self.write_json(path, sol.to_dict())

    # Metrics and reports

    def load_metrics(self, path: PathLike) -> MetricsReport:
        data = self.read_json(path, "metrics")
        if not isinstance(data, dict) or data.get("schema") != METRICS_SCHEMA:
            raise SchemaError(f"metrics file {path} does not carry schema {METRICS_SCHEMA!r}")
        return MetricsReport.from_dict(data.get("metrics", {}), strict=self.strict)

    def save_metrics(self, path: PathLike, report: MetricsReport) -> Path:
        return self.write_json(path, {"schema": METRICS_SCHEMA, "metrics": report.to_dict()})

    def save_report(self, path: PathLike, bundle: Dict[str, Any]) -> Path:
        return self.write_json(path, bundle)

    def load_report(self, path: PathLike) -> Dict[str, Any]:
        data = self.read_json(path, "report")
        if not isinstance(data, dict) or data.get("schema") != REPORT_SCHEMA:
            raise SchemaError(f"report file {path} does not carry schema {REPORT_SCHEMA!r}")
        return data

    # Manifests

    def save_manifest(self, path: PathLike, manifest: RunManifest) -> Path:
        return self.write_json(path, manifest.to_dict())

    def load_manifest(self, path: PathLike) -> RunManifest:
        return RunManifest.from_dict(self.read_json(path, "manifest"), strict=self.strict)
