"""
Run directories: what the solver writes and what the analysis reads back.

A run directory holds run.json, port.csv and huygens.bin (plus scene.json
for convenience). Analysis artifacts are written next to them.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from em_solver import PortRecord, SourceSpec
from errors import MissingRunFilesError
from geometry import Scene
from huygens import HuygensData

RUN_FILES = ("run.json", "port.csv", "huygens.bin")


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise MissingRunFilesError(f"{path.name} not found in {path.parent}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def pattern_filename(f_hz):
    return f"pattern_{f_hz / 1e9:g}GHz.csv"


@dataclass
class LoadedRun:
    directory: Path
    info: dict
    record: PortRecord
    huygens: HuygensData = None
    scene: Scene = None

    @property
    def source(self):
        return self.record.source


class RunStore:
    def __init__(self, directory):
        self.directory = Path(directory)

    def write_run(self, output, scene=None, config=None):
        """Persist a RunOutput; returns the list of files written."""
        self.directory.mkdir(parents=True, exist_ok=True)
        info = output.to_dict()
        if config is not None:
            info["config"] = config
        written = [write_json(self.directory / "run.json", info),
                   output.record.write_csv(self.directory / "port.csv")]
        huygens = output.huygens or HuygensData(frequencies_hz=np.zeros(0), faces=[])
        written.append(huygens.write(self.directory / "huygens.bin"))
        if scene is not None:
            written.append(scene.save(self.directory / "scene.json"))
        print(f"📁 Run saved to {self.directory} ({', '.join(p.name for p in written)})")
        return written

    def load_run(self):
        missing = [name for name in RUN_FILES if not (self.directory / name).exists()]
        if missing:
            raise MissingRunFilesError(f"run directory {self.directory} lacks {', '.join(missing)}")
        info = read_json(self.directory / "run.json")
        source = SourceSpec(**info["source"])
        record = PortRecord.read_csv(self.directory / "port.csv", dt=info["dt_s"],
                                     resistance_ohms=info["port"]["resistance_ohms"], source=source)
        huygens = HuygensData.read(self.directory / "huygens.bin")
        if len(huygens.frequencies_hz) == 0:
            huygens = None
        scene_file = self.directory / "scene.json"
        scene = Scene.load(scene_file) if scene_file.exists() else None
        return LoadedRun(self.directory, info, record, huygens, scene)

    def write_analysis(self, s11, bands, patterns, metrics):
        written = []
        s11_csv = self.directory / "s11.csv"
        s11.to_frame().to_csv(s11_csv, index=False, float_format="%.10g")
        written.append(s11_csv)
        if s11.valid.any():
            written.append(s11.write_touchstone(self.directory, "s11"))
        written.append(write_json(self.directory / "bands.json", [b.to_dict() for b in bands]))
        for pattern in patterns:
            path = self.directory / pattern_filename(pattern.frequency_hz)
            pattern.to_frame().to_csv(path, index=False, float_format="%.6f")
            written.append(path)
        written.append(metrics.write(self.directory / "metrics.json"))
        print(f"📁 Analysis saved: {', '.join(p.name for p in written)}")
        return written
