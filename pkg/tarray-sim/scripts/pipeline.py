"""
End-to-end workflow: geometry -> simulate -> analyze -> report, and the
parameter sweep built on it.
"""

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from analysis import accepted_power, estimate_resonances, find_bands, s11_from_port, summarize
from design_calc import compute_effective_permittivity, compute_length_extension
from em_solver import SimulationSettings, SourceSpec, run_simulation
from errors import AnalysisError, GeometryPreconditionError, SolverError
from geometry import Scene
from ntff import ntff_transform
from oracles import CavitySpec, cavity_resonance, dipole_directivity, tline_patch_resonance, to_dbi
from presets import PRESETS, build_preset, coerce_parameter, resolve_parameter
from report import ReportGenerator, published_comparison
from resource_guard import preflight, print_alerts
from run_store import RunStore, write_json

DEFAULT_OUTPUT_ROOT = "runs"


@dataclass
class RunConfig:
    """Everything a command needs; keys match the CLI flags with dashes as underscores."""

    preset: str = None
    scene: str = None
    cell_mm: float = None
    cell_z_mm: float = None
    fmin_ghz: float = 4.0
    fmax_ghz: float = 16.0
    steps: object = "auto"
    max_steps: int = 20000
    pml_cells: int = 10
    air_margin_mm: float = 3.0
    frequencies_ghz: list = field(default_factory=list)
    output: str = None
    threshold_db: float = -10.0
    compare_published: bool = False
    workers: int = None
    overrides: dict = field(default_factory=dict)
    sweep: dict = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.fmin_ghz < self.fmax_ghz:
            raise SolverError(f"frequency window needs f_min < f_max, got {self.fmin_ghz} and {self.fmax_ghz} GHz")
        if self.cell_mm is not None and not self.cell_mm > 0.0:
            raise SolverError(f"cell size must be > 0 mm, got {self.cell_mm}")
        if self.steps != "auto" and int(self.steps) < 0:
            raise SolverError(f"step count must be >= 0, got {self.steps}")
        return self

    @classmethod
    def resolve(cls, file_values=None, flag_values=None):
        """Built-in defaults, overridden by the config file, overridden by flags that were given."""
        known = {f.name for f in fields(cls)}
        merged = {}
        for source in (file_values or {}, flag_values or {}):
            for key, value in source.items():
                key = key.replace("-", "_")
                if key not in known or value is None:
                    continue
                if key == "overrides":
                    merged["overrides"] = {**merged.get("overrides", {}), **value}
                else:
                    merged[key] = value
        return cls(**merged)

    @classmethod
    def from_file(cls, path, flag_values=None):
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return cls.resolve(json.load(f), flag_values)

    @property
    def target(self):
        return self.preset or self.scene

    def to_dict(self):
        return asdict(self)


def load_scene(config):
    if config.scene:
        return Scene.load(config.scene)
    return build_preset(config.preset or "paper-3x3", **config.overrides)


def simulation_settings(config, scene):
    cell = config.cell_mm or scene.metadata.get("cell_mm") or 0.2
    kwargs = dict(cell_mm=cell, cell_z_mm=config.cell_z_mm, air_margin_mm=config.air_margin_mm,
                  pml_cells=config.pml_cells, max_steps=config.max_steps,
                  frequencies_hz=tuple(f * 1e9 for f in config.frequencies_ghz))
    if config.workers is not None:
        kwargs["workers"] = int(config.workers)
    return SimulationSettings(**kwargs)


def _nearest(values, target):
    if len(values) == 0:
        return None
    return float(min(values, key=lambda v: abs(v - target)))


def predictions(scene, run, s11, patterns):
    """Rows of (quantity, predicted, simulated, unit) from the analytic oracles that apply."""
    rows = []
    if scene is None:
        return rows
    meta = scene.metadata
    oracle = meta.get("oracle")
    source = run.record.source

    if oracle == "cavity":
        a, b, d = meta["cavity_mm"]
        try:
            found = [r["frequency_hz"] for r in
                     estimate_resonances(run.record, source.f_min_hz, source.f_max_hz)]
        except AnalysisError:
            found = []
        for m, n, p in ((1, 0, 1), (1, 0, 2)):
            spec = CavitySpec(a, b, d, m, n, p)
            f = cavity_resonance(spec)
            if source.f_min_hz <= f <= source.f_max_hz:
                simulated = _nearest(found, f)
                rows.append({"quantity": f"{spec.label} resonance", "predicted": f / 1e9,
                             "simulated": None if simulated is None else simulated / 1e9, "unit": "GHz"})

    elif oracle == "dipole":
        kind = meta["dipole_kind"]
        for pattern in patterns:
            rows.append({"quantity": f"{kind} dipole directivity @ {pattern.frequency_hz / 1e9:g} GHz",
                         "predicted": to_dbi(dipole_directivity(kind)),
                         "simulated": to_dbi(max(pattern.value_at(90.0, 0.0), 1e-30)), "unit": "dBi"})
            rows.append({"quantity": "sphere average of D", "predicted": 1.0,
                         "simulated": pattern.sphere_average(), "unit": ""})

    elif oracle == "port" and scene.port.load_ohms is None:
        valid = s11.valid
        rows.append({"quantity": "mean |S11| (open port)", "predicted": 0.0,
                     "simulated": float(np.mean(s11.s11_db[valid])) if valid.any() else None, "unit": "dB"})

    elif "design_parameters" in meta:
        p = meta["design_parameters"]
        er, h, w = p["relative_permittivity"], p["height_mm"], p["patch_width_mm"]
        e_eff = compute_effective_permittivity(er, h, w)
        dl = compute_length_extension(e_eff, h, w)
        resonance = tline_patch_resonance(p["patch_length_mm"], dl, e_eff)
        valid = s11.valid
        f = s11.frequencies_hz[valid]
        minima, _ = find_peaks(-s11.s11_db[valid])
        for label, predicted in (("patch resonance (single extension)", resonance.single_extension_hz),
                                 ("patch resonance (two extensions)", resonance.two_extension_hz)):
            simulated = _nearest(f[minima], predicted)
            rows.append({"quantity": label, "predicted": predicted / 1e9,
                         "simulated": None if simulated is None else simulated / 1e9, "unit": "GHz"})
    return rows


class AntennaPipeline:
    """Runs one configuration through simulate and analyze, writing one run directory."""

    def __init__(self, config, quiet=False):
        self.config = config
        self.quiet = quiet
        self.reporter = ReportGenerator()

    def _say(self, message):
        if not self.quiet:
            print(message)

    def output_dir(self, scene):
        return Path(self.config.output or Path(DEFAULT_OUTPUT_ROOT) / scene.name)

    def simulate(self, scene=None):
        scene = scene or load_scene(self.config)
        settings = simulation_settings(self.config, scene)
        source = SourceSpec.from_band(self.config.fmin_ghz * 1e9, self.config.fmax_ghz * 1e9)
        report = preflight(scene, settings)
        print_alerts(report)

        self._say("=" * 60)
        self._say(f"🚀 Simulating {scene.name} at {settings.cell_mm} mm")
        self._say("=" * 60)
        output = run_simulation(scene, source=source, n_steps=self.config.steps, settings=settings)
        directory = self.output_dir(scene)
        RunStore(directory).write_run(output, scene=scene, config=self.config.to_dict())
        self._say(f"✅ {output.n_steps:,} steps in {output.elapsed_s:.1f} s "
                  f"({'decayed' if output.decayed else 'not decayed'})")
        return directory, output

    def analyze(self, directory=None, preset=None):
        directory = Path(directory or self.config.output)
        store = RunStore(directory)
        run = store.load_run()
        threshold = self.config.threshold_db
        self._say(f"📊 Analyzing {directory}")

        s11 = s11_from_port(run.record, decayed=run.info.get("decayed"))
        bands = find_bands(s11, threshold)
        patterns = []
        if run.huygens is not None:
            for f in run.huygens.frequencies_hz:
                if not s11.frequencies_hz[0] <= f <= s11.frequencies_hz[-1]:
                    continue
                p_in = accepted_power(run.record, f)
                pattern = ntff_transform(run.huygens, f, input_power_w=p_in if p_in > 0.0 else None)
                patterns.append(pattern)

        metrics = summarize(s11, patterns, threshold)
        metrics.warnings = list(run.info.get("warnings", [])) + metrics.warnings
        store.write_analysis(s11, bands, patterns, metrics)

        rows = predictions(run.scene, run, s11, patterns)
        comparison = None
        preset = preset or self.config.preset or (run.scene.name if run.scene else None)
        if self.config.compare_published:
            comparison = published_comparison(metrics, preset)
            comparison.to_csv(directory / "published_comparison.csv", index=False, float_format="%.4f")
            self._say(f"📁 Comparison table: {directory / 'published_comparison.csv'}")
        self.reporter.write(directory / "report.md", run.info, s11, metrics, rows, comparison)

        for band in metrics.bands:
            self._say(f"   • {band.f_low_hz / 1e9:.2f}-{band.f_high_hz / 1e9:.2f} GHz")
        self._say(f"✅ {len(metrics.bands)} band(s) at or below {threshold:g} dB, "
                  f"aggregate {metrics.aggregate_bandwidth_hz / 1e9:.2f} GHz")
        return metrics

    def run(self):
        scene = load_scene(self.config)
        directory, _ = self.simulate(scene)
        return directory, self.analyze(directory, preset=self.config.preset)


# -- sweep ---------------------------------------------------------------------

def sweep_values(values=None, start=None, stop=None, points=None):
    if values:
        return list(values)
    if start is None or stop is None or not points:
        raise SolverError("sweep needs --values or --start, --stop and --points")
    return [float(v) for v in np.linspace(float(start), float(stop), int(points))]


def setup_sweep_logger(directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    logger = logging.getLogger("tarray.sweep")
    logger.setLevel(logging.INFO)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    for handler in (logging.FileHandler(directory / "sweep.log"), logging.StreamHandler()):
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    logger.propagate = False
    return logger


def _sweep_value(parameter, value):
    # values that do not cast are kept so their point fails on its own row
    try:
        return coerce_parameter(parameter, value)
    except GeometryPreconditionError:
        return value


def _point_label(index, parameter, value):
    text = f"{value:g}" if isinstance(value, float) else str(value)
    return f"{index:03d}_{parameter}_{text}"


def run_sweep_point(config_dict, index, parameter, value, directory):
    """One isolated sweep point; any failure becomes a row with status "failed"."""
    row = {"index": index, "parameter": parameter, "value": value, "status": "failed",
           "n_bands": None, "aggregate_bandwidth_hz": None, "min_s11_db": None,
           "min_s11_frequency_hz": None, "peak_gain_dbi": None, "run_dir": str(directory), "message": ""}
    started = time.time()
    try:
        config = RunConfig(**{**config_dict, "output": str(directory), "sweep": None})
        if parameter == "preset":
            config = replace(config, preset=value, scene=None)
        else:
            value = coerce_parameter(parameter, value)
            config = replace(config, overrides={**config.overrides, parameter: value})
        _, metrics = AntennaPipeline(config, quiet=True).run()
        row.update(status="ok", n_bands=len(metrics.bands),
                   aggregate_bandwidth_hz=metrics.aggregate_bandwidth_hz,
                   min_s11_db=metrics.min_s11_db, min_s11_frequency_hz=metrics.min_s11_frequency_hz,
                   peak_gain_dbi=metrics.peak_gain_dbi)
    except Exception as e:
        row["message"] = f"{type(e).__name__}: {e}"
    row["elapsed_s"] = round(time.time() - started, 3)
    return row


def run_sweep(config, parameter, values, output_root=None, workers=None):
    """
    One simulate+analyze per value of ``parameter`` (a design parameter or
    ``preset``). Points run in separate processes when ``workers`` > 1.
    Returns the sweep table, also written to sweep.csv.
    """
    if parameter == "preset":
        unknown = [v for v in values if v not in PRESETS]
        if unknown:
            raise SolverError(f"unknown preset(s) in sweep: {', '.join(map(str, unknown))}")
    else:
        resolve_parameter(parameter)
        values = [_sweep_value(parameter, v) for v in values]
    if not values:
        raise SolverError("sweep needs at least one value")

    root = Path(output_root or config.output or Path(DEFAULT_OUTPUT_ROOT) / f"sweep_{parameter}")
    logger = setup_sweep_logger(root)
    workers = int(workers or os.getenv("TARRAY_THREADS", 1))
    base = replace(config, workers=1 if workers > 1 else config.workers).to_dict()
    logger.info(f"🚀 Sweep of {parameter} over {len(values)} point(s), {workers} worker(s)")

    jobs = [(base, i, parameter, v, root / _point_label(i, parameter, v)) for i, v in enumerate(values)]
    rows = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_sweep_point, *job): job for job in jobs}
            for future in as_completed(futures):
                rows.append(future.result())
                _log_row(logger, rows[-1])
    else:
        for job in jobs:
            rows.append(run_sweep_point(*job))
            _log_row(logger, rows[-1])

    table = pd.DataFrame(sorted(rows, key=lambda r: r["index"])).drop(columns="index")
    table.to_csv(root / "sweep.csv", index=False, float_format="%.6g")
    write_json(root / "sweep.json", {"parameter": parameter, "values": values, "config": base})
    failed = int((table["status"] == "failed").sum())
    logger.info(f"✅ Sweep complete: {len(table) - failed} ok, {failed} failed; table at {root / 'sweep.csv'}")
    return table


def _log_row(logger, row):
    if row["status"] == "ok":
        logger.info(f"📦 {row['parameter']} = {row['value']}: {row['n_bands']} band(s), "
                    f"aggregate {row['aggregate_bandwidth_hz'] / 1e9:.3f} GHz")
    else:
        logger.error(f"❌ {row['parameter']} = {row['value']} failed: {row['message']}")
