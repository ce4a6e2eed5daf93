"""
Human-readable run report and the published-results comparison table.
"""

import math
from pathlib import Path

import numpy as np
import pandas as pd

# Published figures per preset; bands in GHz
PUBLISHED_TARGETS = {
    "paper-3x3": {
        "bands_ghz": [(6.62, 7.54), (8.27, 8.78), (10.98, 11.78), (13.65, 15.4)],
        "peak_gain_dbi": (7.99, 15.35),
        "min_s11_db": (-31.01, 8.43),
        "band_efficiency": (0.92, (8.27, 8.78)),
    },
    "single-patch": {
        "peak_gain_dbi": (6.38, 15.35),
        "min_s11_db": (None, 8.25),
    },
    "double-t": {
        "peak_gain_dbi": (6.63, 14.8),
        "side_lobe_dbi": -8.8,
    },
}


def ghz(f_hz, rounding_mhz=10):
    """Frequency in GHz rounded to ``rounding_mhz``, two decimals."""
    if f_hz is None:
        return "n/a"
    step = rounding_mhz * 1e6
    return f"{round(f_hz / step) * step / 1e9:.2f}"


def _deviation(simulated, published):
    if simulated is None or published is None or published == 0:
        return None
    return 100.0 * (simulated - published) / abs(published)


def published_comparison(metrics, preset):
    """Rows of (quantity, published, simulated, unit, deviation_pct); empty for presets without targets."""
    targets = PUBLISHED_TARGETS.get(preset)
    rows = []
    if not targets:
        return pd.DataFrame(rows, columns=["quantity", "published", "simulated", "unit", "deviation_pct"])

    def add(quantity, published, simulated, unit):
        rows.append({"quantity": quantity, "published": published, "simulated": simulated,
                     "unit": unit, "deviation_pct": _deviation(simulated, published)})

    centers = [b.center_hz / 1e9 for b in metrics.bands]
    for lo, hi in targets.get("bands_ghz", []):
        center = 0.5 * (lo + hi)
        nearest = min(centers, key=lambda c: abs(c - center)) if centers else None
        add(f"band center {lo:.2f}-{hi:.2f} GHz", center, nearest, "GHz")
    if "bands_ghz" in targets:
        add("band count", len(targets["bands_ghz"]), len(metrics.bands), "")

    if "peak_gain_dbi" in targets:
        gain, f = targets["peak_gain_dbi"]
        add("peak gain", gain, metrics.peak_gain_dbi, "dBi")
        add("peak gain frequency", f, None if metrics.peak_gain_frequency_hz is None
            else metrics.peak_gain_frequency_hz / 1e9, "GHz")
    if "min_s11_db" in targets:
        s11, f = targets["min_s11_db"]
        if s11 is not None:
            add("min S11", s11, metrics.min_s11_db, "dB")
        add("min S11 frequency", f, None if metrics.min_s11_frequency_hz is None
            else metrics.min_s11_frequency_hz / 1e9, "GHz")
    if "band_efficiency" in targets:
        eta, (lo, hi) = targets["band_efficiency"]
        simulated = None
        for band, value in zip(metrics.bands, metrics.band_efficiency):
            if value is not None and band.f_low_hz <= hi * 1e9 and band.f_high_hz >= lo * 1e9:
                simulated = value
                break
        add(f"efficiency {lo:.2f}-{hi:.2f} GHz", eta, simulated, "")
    if "side_lobe_dbi" in targets:
        levels = [lobe["side_lobe_dbi"] for lobe in metrics.side_lobes if lobe["side_lobe_dbi"] is not None]
        add("side lobe", targets["side_lobe_dbi"], max(levels) if levels else None, "dBi")
    return pd.DataFrame(rows, columns=["quantity", "published", "simulated", "unit", "deviation_pct"])


def _table(frame, floatfmt=".3f"):
    """Markdown table from a DataFrame."""
    if frame.empty:
        return "_none_\n"
    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    rule = "|" + "|".join("---" for _ in frame.columns) + "|"
    lines = [header, rule]
    for _, row in frame.iterrows():
        cells = []
        for value in row:
            if value is None or (isinstance(value, float) and math.isnan(value)):
                cells.append("n/a")
            elif isinstance(value, float):
                cells.append(format(value, floatfmt))
            else:
                cells.append(str(value))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


class ReportGenerator:
    """Renders report.md from the analysis products of one run."""

    TEMPLATE = """# Run report: {scene}

## Run
- Grid: {grid}
- Steps: {steps} ({decay})
- Cell: {cell} mm, CPML cells: {pml}

## Reflection
- Minimum S11: {min_s11} dB at {min_s11_f} GHz (VSWR {vswr})
- Bands at or below {threshold} dB:

{bands}
- Aggregate bandwidth: {aggregate} GHz

## Far field
{gain}
- Peak gain: {peak_gain} dBi at {peak_gain_f} GHz

{side_lobes}
## 6G allocation coverage
{coverage}
## Predicted vs simulated
{predictions}
## Published comparison
{comparison}
## Warnings
{warnings}
"""

    def render(self, run_info, s11, metrics, predictions=None, comparison=None):
        valid = s11.valid
        f_valid, vswr_valid = s11.frequencies_hz[valid], s11.vswr[valid]

        def best_vswr(band):
            inside = (f_valid >= band.f_low_hz) & (f_valid <= band.f_high_hz)
            return f"{vswr_valid[inside].min():.2f}" if inside.any() else "n/a"

        bands = pd.DataFrame([{
            "f_low_GHz": ghz(b.f_low_hz), "f_high_GHz": ghz(b.f_high_hz),
            "center_GHz": ghz(b.center_hz), "bandwidth_MHz": f"{round(b.bandwidth_hz / 1e7) * 10:.0f}",
            "fractional_%": f"{100 * b.fractional_bandwidth:.1f}",
            "min_VSWR": best_vswr(b),
            "efficiency": "n/a" if eta is None else f"{eta:.3f}",
        } for b, eta in zip(metrics.bands, metrics.band_efficiency)])

        vswr = "n/a"
        if metrics.min_s11_db is not None and np.isfinite(metrics.min_s11_db):
            mag = 10.0 ** (metrics.min_s11_db / 20.0)
            vswr = f"{(1 + mag) / (1 - mag):.3f}" if mag < 1.0 else "inf"

        gain = pd.DataFrame([{"frequency_GHz": ghz(g["frequency_hz"]), "peak_gain_dBi": g["peak_gain_dbi"]}
                             for g in metrics.gain_by_frequency])
        lobes = pd.DataFrame([{
            "phi_deg": lobe["phi_deg"], "main_dBi": lobe["main_lobe_dbi"],
            "side_dBi": lobe["side_lobe_dbi"], "relative_dB": lobe["relative_db"],
        } for lobe in metrics.side_lobes])
        coverage = pd.DataFrame([{"allocation": k, "covered_%": 100.0 * v}
                                 for k, v in metrics.allocation_coverage.items()])

        return self.TEMPLATE.format(
            scene=run_info.get("scene", {}).get("name", "run"),
            grid=" x ".join(str(run_info.get("grid", {}).get(k, "?")) for k in ("nx", "ny", "nz")),
            steps=f"{run_info.get('n_steps', 0):,}",
            decay="decayed" if run_info.get("decayed") else "did not decay",
            cell=run_info.get("settings", {}).get("cell_mm", "?"),
            pml=run_info.get("grid", {}).get("pml_cells", "?"),
            min_s11="n/a" if metrics.min_s11_db is None else f"{metrics.min_s11_db:.2f}",
            min_s11_f=ghz(metrics.min_s11_frequency_hz),
            vswr=vswr,
            threshold=f"{metrics.threshold_db:g}",
            bands=_table(bands),
            aggregate=f"{metrics.aggregate_bandwidth_hz / 1e9:.2f}",
            gain=_table(gain, ".2f"),
            peak_gain="n/a" if metrics.peak_gain_dbi is None else f"{metrics.peak_gain_dbi:.2f}",
            peak_gain_f=ghz(metrics.peak_gain_frequency_hz),
            side_lobes=_table(lobes, ".2f"),
            coverage=_table(coverage, ".1f"),
            predictions=_table(pd.DataFrame(predictions or [])),
            comparison=_table(comparison if comparison is not None else pd.DataFrame()),
            warnings="\n".join(f"- {w}" for w in metrics.warnings) or "_none_",
        )

    def write(self, path, *args, **kwargs):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(*args, **kwargs), encoding="utf-8")
        return path
