"""Tests for persistence layer."""

import json
import os
from unittest.mock import patch

import pytest

import cases
from exceptions import SchemaError
from metrics import MetricsReport
from persistence import (
    MANIFEST_SCHEMA,
    PersistenceManager,
    RunManifest,
    canonical_json,
    case_digest,
    content_digest,
    file_digest,
)


def _manifest(**overrides):
    fields = dict(
        command="solve", variant="vtl", label="vtl", case_source="toy1.json", case_sha256="ab" * 32,
        scenarios_source="builtin", scenarios_sha256="cd" * 32, seed=7, solver_backend="highs",
        solver_options={"relative_mip_gap": 1e-4}, status="optimal", objective=123.5,
        created_at="2026-01-01T00:00:00", files={"solution": "solution.json"},
    )
    fields.update(overrides)
    return RunManifest(**fields)


class TestDigests:
    """Test canonical JSON and content hashes."""

    def test_canonical_json_is_order_independent(self):
        assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})
        assert canonical_json({"a": 1}) == '{"a":1}'

    def test_content_digest(self):
        digest = content_digest({"x": 1})
        assert len(digest) == 64
        assert digest == content_digest({"x": 1})
        assert digest != content_digest({"x": 2})

    def test_case_digest_tracks_content(self):
        assert case_digest(cases.single_bus().case) == case_digest(cases.single_bus().case)
        assert case_digest(cases.single_bus().case) != case_digest(cases.single_bus(load_mw=90.0).case)

    def test_file_digest(self, temp_dir):
        path = temp_dir / "blob.bin"
        path.write_bytes(b"abc")
        assert file_digest(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


class TestPersistenceManager:
    """Test PersistenceManager functionality."""

    def test_initialization(self, mock_logger):
        with patch("persistence.APP_CONFIG") as mock_config:
            mock_config.strict_schemas = False
            manager = PersistenceManager(mock_logger)

        assert manager.logger == mock_logger
        assert manager.strict is False

    def test_explicit_strictness_wins(self, mock_logger):
        with patch("persistence.APP_CONFIG") as mock_config:
            mock_config.strict_schemas = False
            assert PersistenceManager(mock_logger, strict=True).strict is True

    def test_write_text_creates_parents(self, test_persistence_manager, temp_dir):
        path = test_persistence_manager.write_text(temp_dir / "a" / "b" / "out.txt", "hello\n")

        assert path.read_text() == "hello\n"
        assert [p.name for p in path.parent.iterdir()] == ["out.txt"]

    def test_write_text_failure_keeps_target(self, test_persistence_manager, temp_dir):
        target = temp_dir / "keep.txt"
        target.write_text("original")
        with patch("persistence.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError):
                test_persistence_manager.write_text(target, "new")

        assert target.read_text() == "original"
        assert sorted(os.listdir(temp_dir)) == ["keep.txt"]

    def test_read_json_missing_file(self, test_persistence_manager, temp_dir):
        with pytest.raises(FileNotFoundError):
            test_persistence_manager.read_json(temp_dir / "nope.json")

    def test_read_json_empty_file(self, test_persistence_manager, temp_dir):
        path = temp_dir / "empty.json"
        path.write_text("   \n")
        with pytest.raises(SchemaError, match="empty"):
            test_persistence_manager.read_json(path, "case")

    def test_read_json_invalid(self, test_persistence_manager, temp_dir):
        path = temp_dir / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError, match="not valid JSON"):
            test_persistence_manager.read_json(path)


class TestDocuments:
    """Test typed load/save of each artifact."""

    def test_case_round_trip(self, test_persistence_manager, temp_dir, toy_case):
        path = test_persistence_manager.save_case(temp_dir / "case.json", toy_case)
        loaded = test_persistence_manager.load_case(path)

        assert loaded == toy_case
        test_persistence_manager.logger.info.assert_called()

    def test_case_unknown_field_strict(self, test_persistence_manager, temp_dir, toy_case):
        data = toy_case.to_dict()
        data["extra"] = True
        path = temp_dir / "case.json"
        path.write_text(json.dumps(data))
        with pytest.raises(SchemaError, match="unknown"):
            test_persistence_manager.load_case(path)

    def test_case_unknown_field_lenient(self, mock_logger, temp_dir, toy_case):
        data = toy_case.to_dict()
        data["extra"] = True
        path = temp_dir / "case.json"
        path.write_text(json.dumps(data))
        assert PersistenceManager(mock_logger, strict=False).load_case(path) == toy_case

    def test_scenarios_round_trip(self, test_persistence_manager, temp_dir, toy_scenarios):
        path = test_persistence_manager.save_scenarios(temp_dir / "scen.json", toy_scenarios)
        assert test_persistence_manager.load_scenarios(path) == toy_scenarios

    def test_solution_schema_checked(self, test_persistence_manager, temp_dir):
        path = temp_dir / "solution.json"
        path.write_text(json.dumps({"schema": "something-else"}))
        with pytest.raises(SchemaError, match="solution schema"):
            test_persistence_manager.load_solution(path)

    def test_metrics_round_trip(self, test_persistence_manager, temp_dir):
        report = MetricsReport(label="base", variant="base", status="optimal", objective=10.0,
                               congestion_counts=(1, 0), case_digest="c", scenario_digest="s")
        path = test_persistence_manager.save_metrics(temp_dir / "metrics.json", report)
        loaded = test_persistence_manager.load_metrics(path)

        assert loaded.objective == 10.0
        assert loaded.congestion_counts == (1, 0)

    def test_metrics_schema_checked(self, test_persistence_manager, temp_dir):
        path = temp_dir / "metrics.json"
        path.write_text(json.dumps({"metrics": {}}))
        with pytest.raises(SchemaError):
            test_persistence_manager.load_metrics(path)

    def test_report_schema_checked(self, test_persistence_manager, temp_dir):
        path = temp_dir / "report.json"
        path.write_text(json.dumps({"tables": {}}))
        with pytest.raises(SchemaError):
            test_persistence_manager.load_report(path)


class TestRunManifest:
    """Test the run manifest document."""

    def test_round_trip(self, test_persistence_manager, temp_dir):
        manifest = _manifest()
        path = test_persistence_manager.save_manifest(temp_dir / "manifest.json", manifest)

        assert json.loads(path.read_text())["schema"] == MANIFEST_SCHEMA
        assert test_persistence_manager.load_manifest(path) == manifest

    def test_wrong_schema(self):
        with pytest.raises(SchemaError, match="manifest schema"):
            RunManifest.from_dict({**_manifest().to_dict(), "schema": "v0"})

    def test_unknown_field(self):
        data = {**_manifest().to_dict(), "operator": "night shift"}
        with pytest.raises(SchemaError, match="unknown"):
            RunManifest.from_dict(data)
        assert RunManifest.from_dict(data, strict=False) == _manifest()

    def test_missing_required_field(self):
        data = _manifest().to_dict()
        del data["case_sha256"]
        with pytest.raises(SchemaError):
            RunManifest.from_dict(data)
