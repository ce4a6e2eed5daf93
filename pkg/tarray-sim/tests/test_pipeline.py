from types import SimpleNamespace

import pandas as pd
import pytest

from errors import GeometryPreconditionError
from pipeline import AntennaPipeline, RunConfig, load_scene, run_sweep, run_sweep_point


@pytest.fixture
def fake_run(monkeypatch):
    """Replace the FDTD run with a scene build plus canned metrics."""
    built = []

    def run(self):
        if self.config.overrides.get("g") == 9.9:
            raise RuntimeError("solver crashed")
        scene = load_scene(self.config)
        built.append(scene)
        metrics = SimpleNamespace(bands=[], aggregate_bandwidth_hz=0.0, min_s11_db=-12.0,
                                  min_s11_frequency_hz=8e9, peak_gain_dbi=5.0)
        return self.config.output, metrics

    monkeypatch.setattr(AntennaPipeline, "run", run)
    return built


class TestSweepPoint:
    def test_integer_parameter_given_as_float(self, tmp_path, fake_run):
        row = run_sweep_point(RunConfig(preset="paper-3x3", steps=8).to_dict(), 0, "rows", 3.0, tmp_path)
        assert row["status"] == "ok"
        assert len(fake_run[0].elements) == 9

    def test_unexpected_error_becomes_a_failed_row(self, tmp_path, fake_run):
        row = run_sweep_point(RunConfig(preset="paper-3x3").to_dict(), 4, "g", 9.9, tmp_path)
        assert row["status"] == "failed"
        assert row["message"] == "RuntimeError: solver crashed"
        assert row["elapsed_s"] >= 0.0


class TestRunSweep:
    def test_failed_point_does_not_stop_the_sweep(self, tmp_path, fake_run):
        table = run_sweep(RunConfig(preset="paper-3x3"), "g", ["1.59", "9.9", "2.2"],
                          output_root=tmp_path, workers=1)
        assert list(table["status"]) == ["ok", "failed", "ok"]
        written = pd.read_csv(tmp_path / "sweep.csv")
        assert list(written["value"]) == [1.59, 9.9, 2.2]
        assert list(written["status"]) == ["ok", "failed", "ok"]
        assert "solver crashed" in written.loc[1, "message"]
        assert "solver crashed" in (tmp_path / "sweep.log").read_text(encoding="utf-8")

    def test_rows_sweep_with_a_fractional_value(self, tmp_path, fake_run):
        table = run_sweep(RunConfig(preset="paper-3x3"), "rows", ["1", "2.5", "2"],
                          output_root=tmp_path, workers=1)
        assert list(table["status"]) == ["ok", "failed", "ok"]
        assert "whole number" in table.loc[1, "message"]
        assert [len(scene.elements) for scene in fake_run] == [3, 6]

    def test_unknown_parameter_is_rejected_up_front(self, tmp_path):
        with pytest.raises(GeometryPreconditionError):
            run_sweep(RunConfig(preset="paper-3x3"), "bogus", [1.0], output_root=tmp_path, workers=1)
