"""Pytest configuration and fixtures for vtl-scuc tests."""

import json
import shutil
import tempfile
from pathlib import Path
from unittest.mock import Mock

import pytest

import cases
from config import RunConfig, ScenarioSource
from models import (
    Branch,
    Bus,
    CaseFile,
    LoadProfile,
    RenewableKind,
    RenewableUnit,
    StorageUnit,
    ThermalGen,
    VtlPair,
)
from persistence import PersistenceManager
from scenarios import ScenarioSet
from solvers import PyomoBackend, ScipyHighsBackend, SolverOptions

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def mock_logger():
    """Mock logger for testing."""
    return Mock()


@pytest.fixture
def test_persistence_manager(mock_logger):
    """PersistenceManager writing through a mock logger."""
    return PersistenceManager(mock_logger, strict=True)


@pytest.fixture
def highs():
    """The default scipy HiGHS backend."""
    return ScipyHighsBackend()


@pytest.fixture
def tight_options():
    """Options that close the MIP gap on the small cases."""
    return SolverOptions(relative_mip_gap=1e-9, time_limit_seconds=60.0, threads=1)


@pytest.fixture
def pyomo_highs():
    """Pyomo backend over appsi_highs, skipped when it cannot run here."""
    if not PyomoBackend.available("appsi_highs"):
        pytest.skip("pyomo with appsi_highs is not available")
    return PyomoBackend("appsi_highs")


@pytest.fixture
def single_bus():
    return cases.single_bus()


@pytest.fixture
def two_bus():
    return cases.two_bus_congested()


@pytest.fixture
def storage_pair():
    return cases.storage_pair()


@pytest.fixture
def three_bus():
    return cases.stochastic_three_bus()


@pytest.fixture
def toy_case_path():
    return DATA_DIR / "toy1.json"


@pytest.fixture
def toy_case(toy_case_path):
    return CaseFile.from_dict(json.loads(toy_case_path.read_text(encoding="utf-8")))


@pytest.fixture
def toy_scenarios(toy_case):
    """Two hand-written wind scenarios for the toy case."""
    return ScenarioSet(
        (0.5, 0.5),
        ({"W1": (30.0, 40.0, 50.0, 20.0)}, {"W1": (10.0, 60.0, 70.0, 0.0)}),
    )


def make_case(**overrides) -> CaseFile:
    """
    A small valid case with every entity kind; override any field.

    Buses a-b-c in a line plus a candidate a-c line; storages at a and b.
    """
    fields = dict(
        name="fixture",
        buses=(Bus("a"), Bus("b", load_profile_ref="lb"), Bus("c")),
        branches=(
            Branch("ab", "a", "b", 0.1, 100.0),
            Branch("bc", "b", "c", 0.1, 100.0),
            Branch("ac", "a", "c", 0.2, 50.0, is_candidate_pt=True),
        ),
        thermal_gens=(ThermalGen("g1", "a", 10.0, 150.0, 20.0, ramp_mw_per_interval=50.0),),
        renewables=(RenewableUnit("w1", "c", RenewableKind.WIND, (30.0, 40.0, 50.0)),),
        storages=(
            StorageUnit("s1", "a", 0.0, 40.0, 20.0, 20.0, initial_energy_mwh=10.0),
            StorageUnit("s2", "b", 0.0, 40.0, 20.0, 20.0, initial_energy_mwh=10.0),
        ),
        vtl_pairs=(VtlPair("vt", ("s1", "s2"), spanned_branch="ab"),),
        load_profiles=(LoadProfile("b", (80.0, 90.0, 100.0), id="lb"),),
    )
    fields.update(overrides)
    return CaseFile(**fields)


@pytest.fixture
def case_factory():
    """Build variations of the small fixture case: case_factory(branches=...)."""
    return make_case


@pytest.fixture
def small_case():
    return make_case()


@pytest.fixture
def run_config(temp_dir):
    """Factory for RunConfig objects writing under temp_dir."""

    def _make(case_path: str, variant: str = "base", scenarios: str = "builtin", **kwargs) -> RunConfig:
        kwargs.setdefault("output_dir", str(temp_dir / "out"))
        kwargs.setdefault("solver_backend", "highs")
        kwargs.setdefault("mip_gap", 1e-9)
        kwargs.setdefault("time_limit_seconds", 60.0)
        return RunConfig(case_path=case_path, variant=variant,
                         scenarios=ScenarioSource(path=scenarios), **kwargs)

    return _make
