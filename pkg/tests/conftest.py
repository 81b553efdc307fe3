"""Shared fixtures for the sandwichpy test suite."""

import json
from pathlib import Path

import pytest

from sandwichpy.components.phasecomp import CompensatorSpec, PhaseSetup, load_waveplate, vacuum_stack
from sandwichpy.components.phasematch import CrystalSpec, idler_wavelength, phasematch_temperature
from sandwichpy.utils.config import DATA_DIR

PUMP_NM = 405.4
SIGNAL_NM = 784.0


@pytest.fixture(scope="session")
def paper_crystal():
    return CrystalSpec(11.48, 3.425)


@pytest.fixture(scope="session")
def paper_stack():
    return load_waveplate()


@pytest.fixture(scope="session")
def paper_compensator():
    return CompensatorSpec(18.5, 25.0)


@pytest.fixture(scope="session")
def paper_idler():
    return float(idler_wavelength(PUMP_NM, SIGNAL_NM))


@pytest.fixture(scope="session")
def phasematched_c(paper_crystal):
    return phasematch_temperature(PUMP_NM, SIGNAL_NM, paper_crystal)


@pytest.fixture(scope="session")
def paper_setup(paper_crystal, paper_stack, paper_compensator, phasematched_c):
    return PhaseSetup(PUMP_NM, paper_crystal, paper_stack, paper_compensator, phasematched_c)


@pytest.fixture
def empty_setup():
    """Zero-length crystal, vacuum stack and no compensator."""
    return PhaseSetup(PUMP_NM, CrystalSpec(0.0, 3.425), vacuum_stack(), CompensatorSpec(0.0), 25.0)


@pytest.fixture
def paper_document():
    return json.loads((DATA_DIR / "paper.json").read_text(encoding="utf-8"))


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration document and return its path."""
    def _write(document, name="config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def flat_document(paper_document):
    """Setup with no dispersive phase at all: every visibility is 1."""
    document = dict(paper_document)
    document["crystal"] = {"material": "KTP", "length_mm": 0.0, "poling_period_um": 3.425}
    document["waveplate"] = "vacuum"
    document["compensator"] = {"length_mm": 0.0}
    document["temperatures"] = {"ktp_c": 25.0, "yvo_c": 25.0}
    return document
