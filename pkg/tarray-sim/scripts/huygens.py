"""
Huygens box: running DFTs of tangential E and H on six faces enclosing the
structure, the input of the near-to-far-field transform.

Samples sit at face-cell centers. E is averaged from its two neighboring
edges and H from its four neighboring faces, so both components land on
the same points. E is sampled at integer time steps and H at half steps;
each carries its own phase.

File layout (little-endian): b"PFHUY001", nf (uint32), frequencies (f64),
nfaces (uint32), then per face: id, npts (uint32), normal (3 x f64),
positions (npts x 3 f64, meters), dA (f64), E and H as (nf, npts, 3)
complex arrays stored as interleaved f64 real/imag pairs.
"""

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from errors import MissingRunFilesError

MAGIC = b"PFHUY001"

# Position of each Yee component within its cell, in cell units
OFFSETS = {
    "ex": (0.5, 0.0, 0.0), "ey": (0.0, 0.5, 0.0), "ez": (0.0, 0.0, 0.5),
    "hx": (0.0, 0.5, 0.5), "hy": (0.5, 0.0, 0.5), "hz": (0.5, 0.5, 0.0),
}


@dataclass
class HuygensFace:
    face_id: int
    normal: np.ndarray
    positions: np.ndarray
    area: float
    e: np.ndarray
    h: np.ndarray

    @property
    def n_points(self):
        return len(self.positions)


@dataclass
class HuygensData:
    frequencies_hz: np.ndarray
    faces: list

    def frequency_index(self, f_hz, rel_tol=1e-9):
        hits = np.nonzero(np.isclose(self.frequencies_hz, f_hz, rtol=rel_tol, atol=0.0))[0]
        return int(hits[0]) if len(hits) else None

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        freqs = np.asarray(self.frequencies_hz, dtype="<f8")
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(np.array([len(freqs)], dtype="<u4").tobytes())
            f.write(freqs.tobytes())
            f.write(np.array([len(self.faces)], dtype="<u4").tobytes())
            for face in self.faces:
                f.write(np.array([face.face_id, face.n_points], dtype="<u4").tobytes())
                f.write(np.asarray(face.normal, dtype="<f8").tobytes())
                f.write(np.asarray(face.positions, dtype="<f8").tobytes())
                f.write(np.array([face.area], dtype="<f8").tobytes())
                for field in (face.e, face.h):
                    f.write(np.ascontiguousarray(field, dtype="<c16").view("<f8").tobytes())
        return path

    @classmethod
    def read(cls, path):
        path = Path(path)
        if not path.exists():
            raise MissingRunFilesError(f"Huygens file not found: {path}")
        data = path.read_bytes()
        if data[:8] != MAGIC:
            raise MissingRunFilesError(f"{path} is not a Huygens surface file")
        offset = 8

        def take(dtype, count):
            nonlocal offset
            out = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
            offset += out.nbytes
            return out

        nf = int(take("<u4", 1)[0])
        freqs = take("<f8", nf).copy()
        n_faces = int(take("<u4", 1)[0])
        faces = []
        for _ in range(n_faces):
            face_id, npts = (int(v) for v in take("<u4", 2))
            normal = take("<f8", 3).copy()
            positions = take("<f8", 3 * npts).reshape(npts, 3).copy()
            area = float(take("<f8", 1)[0])
            fields = []
            for _ in range(2):
                raw = take("<f8", 2 * nf * npts * 3)
                fields.append(raw.view("<c16").reshape(nf, npts, 3).copy())
            faces.append(HuygensFace(face_id, normal, positions, area, fields[0], fields[1]))
        return cls(frequencies_hz=freqs, faces=faces)


def face_average(array, offsets, plane_axis, plane_index, ranges):
    """
    Average a staggered component onto the face-cell centers of the plane
    ``plane_axis = plane_index``. ``ranges`` gives the (lo, hi) cell range on
    each in-plane axis.
    """
    choices = []
    for axis in range(3):
        at_half = offsets[axis] == 0.5
        if axis == plane_axis:
            i = plane_index
            choices.append([slice(i - 1, i), slice(i, i + 1)] if at_half else [slice(i, i + 1)])
        else:
            lo, hi = ranges[axis]
            choices.append([slice(lo, hi)] if at_half else [slice(lo, hi), slice(lo + 1, hi + 1)])
    total = None
    count = 0
    for combo in itertools.product(*choices):
        block = array[combo]
        total = block.copy() if total is None else total + block
        count += 1
    return np.squeeze(total / count, axis=plane_axis)


class HuygensBox:
    """
    DFT accumulator on the box with node bounds ``(lo, hi)`` per axis,
    given in indices of the full (PML-padded) grid.
    """

    def __init__(self, bounds, spacing, origin_m, frequencies_hz, dt):
        self.bounds = [tuple(int(v) for v in b) for b in bounds]
        for lo, hi in self.bounds:
            if hi - lo < 1 or lo < 1:
                raise ValueError(f"Huygens box bounds {self.bounds} are degenerate")
        self.spacing = tuple(spacing)
        self.origin_m = tuple(origin_m)
        self.frequencies_hz = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
        self.omega = 2.0 * np.pi * self.frequencies_hz
        self.dt = dt
        self.faces = []
        self._build()

    def _build(self):
        face_id = 0
        for axis in range(3):
            others = [a for a in range(3) if a != axis]
            ranges = {a: self.bounds[a] for a in others}
            coords = {}
            for a in others:
                lo, hi = ranges[a]
                coords[a] = self.origin_m[a] + (np.arange(lo, hi) + 0.5) * self.spacing[a]
            g0, g1 = np.meshgrid(coords[others[0]], coords[others[1]], indexing="ij")
            area = self.spacing[others[0]] * self.spacing[others[1]]
            for side, index in ((-1.0, self.bounds[axis][0]), (1.0, self.bounds[axis][1])):
                positions = np.empty((g0.size, 3))
                positions[:, axis] = self.origin_m[axis] + index * self.spacing[axis]
                positions[:, others[0]] = g0.ravel()
                positions[:, others[1]] = g1.ravel()
                normal = np.zeros(3)
                normal[axis] = side
                nf = len(self.frequencies_hz)
                self.faces.append({
                    "id": face_id, "axis": axis, "index": index, "ranges": ranges,
                    "tangential": others, "normal": normal, "positions": positions, "area": area,
                    "e": np.zeros((nf, g0.size, 3), dtype=complex),
                    "h": np.zeros((nf, g0.size, 3), dtype=complex),
                })
                face_id += 1

    def _sample(self, fields, kind, face):
        out = []
        for comp in face["tangential"]:
            name = kind + "xyz"[comp]
            avg = face_average(fields[name], OFFSETS[name], face["axis"], face["index"], face["ranges"])
            out.append(avg.ravel())
        return out

    def accumulate(self, fields, step):
        """Add step ``step``'s samples: E^(n+1) at (n+1) dt, H^(n+1/2) at (n+1/2) dt."""
        phase_e = np.exp(-1j * self.omega * (step + 1) * self.dt) * self.dt
        phase_h = np.exp(-1j * self.omega * (step + 0.5) * self.dt) * self.dt
        for face in self.faces:
            for kind, phase in (("e", phase_e), ("h", phase_h)):
                for comp, samples in zip(face["tangential"], self._sample(fields, kind, face)):
                    face[kind][:, :, comp] += phase[:, None] * samples[None, :]

    def data(self):
        faces = [HuygensFace(f["id"], f["normal"], f["positions"], f["area"], f["e"], f["h"])
                 for f in self.faces]
        return HuygensData(frequencies_hz=self.frequencies_hz.copy(), faces=faces)
