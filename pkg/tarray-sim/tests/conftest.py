import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parents[1] / "scripts"
if str(SCRIPTS) not in sys.path:
    sys.path.insert(0, str(SCRIPTS))

from em_solver import SimulationSettings  # noqa: E402
from presets import DesignParameters  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    """Keep the ledger and progress output of every test inside tmp_path."""
    monkeypatch.setenv("TARRAY_LEDGER_DB", str(tmp_path / "ledger.db"))
    monkeypatch.setenv("TARRAY_PROGRESS_EVERY", "0")
    monkeypatch.setenv("TARRAY_THREADS", "1")
    monkeypatch.delenv("TARRAY_CELL_BUDGET", raising=False)


@pytest.fixture
def table_params():
    """The optimized parameter table as shipped in the presets."""
    return DesignParameters()


@pytest.fixture
def small_settings():
    return SimulationSettings(cell_mm=0.5, pml_cells=6, air_margin_mm=3.0, max_steps=4000,
                              check_every=25, progress_every=0, workers=1)


@pytest.fixture
def run_dir(tmp_path):
    path = tmp_path / "run"
    path.mkdir()
    return path
