import pytest

from em_solver import SimulationSettings
from errors import ResourceError
from presets import build_preset
from resource_guard import DEFAULT_CELL_BUDGET, cell_budget, check_cell_budget, estimate, preflight


class TestEstimate:
    def test_levels(self):
        assert estimate(10, budget=100)["alerts"] == []
        assert estimate(60, budget=100)["alerts"][0]["level"] == "INFO"
        assert estimate(85, budget=100)["alerts"][0]["level"] == "WARNING"
        assert estimate(101, budget=100)["alerts"][0]["level"] == "CRITICAL"

    def test_memory(self):
        assert estimate(1_000_000, budget=10**9)["memory_mb"] == pytest.approx(96.0)

    def test_default_budget(self):
        assert cell_budget() == DEFAULT_CELL_BUDGET

    def test_budget_from_environment(self, monkeypatch):
        monkeypatch.setenv("TARRAY_CELL_BUDGET", "5e6")
        assert cell_budget() == 5_000_000


class TestCheck:
    def test_over_budget_raises(self):
        with pytest.raises(ResourceError, match="exceeds the budget"):
            check_cell_budget(101, budget=100)

    def test_warning_does_not_raise(self):
        assert check_cell_budget(90, budget=100)["utilization"] == pytest.approx(90.0)


class TestPreflight:
    def test_small_fixture_passes(self):
        report = preflight(build_preset("matched-load"), SimulationSettings(cell_mm=0.2))
        assert report["cells"] == 10 * 10 * 10

    def test_array_at_fine_cell_is_refused(self):
        settings = SimulationSettings(cell_mm=0.1, cell_budget=1_000_000)
        with pytest.raises(ResourceError):
            preflight(build_preset("paper-3x3"), settings)
