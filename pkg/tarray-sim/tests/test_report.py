import numpy as np
import pytest

from analysis import SParamResult, summarize
from report import PUBLISHED_TARGETS, ReportGenerator, ghz, published_comparison

FREQS = np.linspace(4e9, 16e9, 1201)


@pytest.fixture
def metrics():
    db = -20.0 + 10.0 * ((FREQS - 8.5e9) / 0.5e9) ** 2
    return summarize(SParamResult(FREQS, 10.0 ** (db / 20.0)), [])


@pytest.fixture
def s11():
    db = -20.0 + 10.0 * ((FREQS - 8.5e9) / 0.5e9) ** 2
    return SParamResult(FREQS, 10.0 ** (db / 20.0))


class TestGhz:
    def test_rounds_to_ten_megahertz(self):
        assert ghz(8.4312e9) == "8.43"
        assert ghz(15.3549e9) == "15.35"

    def test_missing(self):
        assert ghz(None) == "n/a"


class TestPublishedComparison:
    def test_array_rows(self, metrics):
        table = published_comparison(metrics, "paper-3x3")
        rows = table.set_index("quantity")
        assert rows.loc["band count", "published"] == 4
        assert rows.loc["band count", "simulated"] == 1
        assert rows.loc["min S11", "published"] == -31.01
        assert rows.loc["min S11", "deviation_pct"] == pytest.approx(100 * (-20.0 + 31.01) / 31.01, rel=1e-3)

    def test_nearest_band_center(self, metrics):
        table = published_comparison(metrics, "paper-3x3").set_index("quantity")
        assert table.loc["band center 8.27-8.78 GHz", "simulated"] == pytest.approx(8.5, abs=1e-3)

    def test_unknown_preset_is_empty(self, metrics):
        assert published_comparison(metrics, "cavity-te101").empty

    def test_targets_cover_the_published_presets(self):
        assert set(PUBLISHED_TARGETS) == {"paper-3x3", "single-patch", "double-t"}


class TestReport:
    def test_sections(self, s11, metrics, tmp_path):
        info = {"scene": {"name": "paper-3x3"}, "grid": {"nx": 10, "ny": 12, "nz": 4, "pml_cells": 10},
                "n_steps": 1234, "decayed": True, "settings": {"cell_mm": 0.2}}
        rows = [{"quantity": "patch resonance", "predicted": 16.0, "simulated": 15.9, "unit": "GHz"}]
        path = ReportGenerator().write(tmp_path / "report.md", info, s11, metrics, rows,
                                       published_comparison(metrics, "paper-3x3"))
        text = path.read_text()
        assert text.startswith("# Run report: paper-3x3")
        assert "10 x 12 x 4" in text
        assert "1,234" in text
        assert "| 8.00 | 9.00 | 8.50 |" in text
        assert "patch resonance" in text
        assert "-31.010" in text
        assert "## Warnings\n_none_" in text

    def test_empty_tables(self, s11, metrics):
        text = ReportGenerator().render({}, s11, metrics)
        assert "## Predicted vs simulated\n_none_" in text
        assert "## Published comparison\n_none_" in text
