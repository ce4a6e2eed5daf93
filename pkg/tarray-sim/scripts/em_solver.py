"""
3-D Yee-grid FDTD solver.

Field layout for a grid of (Nx, Ny, Nz) cells, PML cells included:

    Ex (Nx,   Ny+1, Nz+1)    Hx (Nx+1, Ny,   Nz)
    Ey (Nx+1, Ny,   Nz+1)    Hy (Nx,   Ny+1, Nz)
    Ez (Nx+1, Ny+1, Nz)      Hz (Nx,   Ny,   Nz+1)

Each step updates H from the curl of E (half step), then E from the curl
of H with per-edge coefficients Ca, Cb built from the averaged cell
permittivity and conductivity. Outer boundary edges and PEC edges have
Ca = Cb = 0, so their tangential E stays exactly zero. Bulk updates are
split into x slabs run on a thread pool; every update is elementwise, so
results do not depend on the number of slabs.

The lumped port is a resistive voltage source spread over a run of
edges. Its voltage is recorded at the half step, (n + 1/2) dt, as the
average of E before and after the update, and its current as
(Vs - v) / R.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.constants import c as C0
from scipy.constants import epsilon_0, mu_0

from cpml import CPML, CPMLSettings, apply_cpml
from errors import DivergenceError, PortConfigurationError, SolverError
from huygens import HuygensBox
from material_grid import voxelize

MM = 1e-3
AXES = "xyz"
E_COMPONENTS = ("ex", "ey", "ez")
H_COMPONENTS = ("hx", "hy", "hz")

# Huygens frequencies when neither the settings nor the scene name any
DEFAULT_PATTERN_FREQUENCIES_HZ = tuple(sorted(
    [f * 1e9 for f in range(4, 17)] + [8.43e9, 15.35e9]))

# Port-energy window for the auto stop when energy sampling is off
DECAY_WINDOW_STEPS = 50


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    pml_cells: int = 10
    courant_factor: float = 0.98

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise SolverError(f"grid needs at least one cell per axis, got {self.nx}x{self.ny}x{self.nz}")
        if min(self.dx, self.dy, self.dz) <= 0.0:
            raise SolverError("grid spacing must be > 0")
        if self.pml_cells < 0:
            raise SolverError(f"pml_cells must be >= 0, got {self.pml_cells}")
        if not 0.0 < self.courant_factor < 1.0:
            raise SolverError(f"Courant factor must lie in (0, 1), got {self.courant_factor}")

    @classmethod
    def from_material(cls, material, pml_cells=10, courant_factor=0.98):
        return cls(material.nx, material.ny, material.nz, material.dx, material.dy, material.dz,
                   pml_cells, courant_factor)

    @property
    def spacing(self):
        return self.dx, self.dy, self.dz

    @property
    def total_shape(self):
        p = 2 * self.pml_cells
        return self.nx + p, self.ny + p, self.nz + p


def compute_timestep(grid):
    """dt = S / (c sqrt(1/dx^2 + 1/dy^2 + 1/dz^2))"""
    return grid.courant_factor / (C0 * math.sqrt(grid.dx ** -2 + grid.dy ** -2 + grid.dz ** -2))


@dataclass(frozen=True)
class SourceSpec:
    """
    Gaussian-modulated sine. The envelope width puts the -20 dB spectral
    edges at ``f_min_hz`` and ``f_max_hz`` (the nearer one when the band is
    not centered on ``center_frequency_hz``).
    """

    center_frequency_hz: float = 10e9
    f_min_hz: float = 4e9
    f_max_hz: float = 16e9
    delay_factor: float = 4.0
    amplitude_v: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.f_min_hz < self.center_frequency_hz < self.f_max_hz:
            raise SolverError(
                f"source needs 0 < f_min < f_c < f_max, got {self.f_min_hz}, "
                f"{self.center_frequency_hz}, {self.f_max_hz}")
        if self.delay_factor < 4.0:
            raise SolverError(f"source delay must be at least 4 tau, got {self.delay_factor} tau")

    @classmethod
    def from_band(cls, f_min_hz, f_max_hz, **kwargs):
        return cls(center_frequency_hz=0.5 * (f_min_hz + f_max_hz),
                   f_min_hz=f_min_hz, f_max_hz=f_max_hz, **kwargs)

    @property
    def tau_s(self):
        half_band = min(self.center_frequency_hz - self.f_min_hz, self.f_max_hz - self.center_frequency_hz)
        return math.sqrt(math.log(10.0)) / (math.pi * half_band)

    @property
    def delay_s(self):
        return self.delay_factor * self.tau_s

    @property
    def end_time_s(self):
        return 2.0 * self.delay_s

    def waveform(self, t):
        s = np.asarray(t, dtype=float) - self.delay_s
        return self.amplitude_v * np.exp(-(s / self.tau_s) ** 2) * np.sin(
            2.0 * np.pi * self.center_frequency_hz * s)

    def to_dict(self):
        return asdict(self)


@dataclass
class SimulationSettings:
    cell_mm: float = 0.2
    cell_z_mm: float = None
    air_margin_mm: float = 3.0
    pml_cells: int = 10
    pml_order: float = 3.0
    kappa_max: float = 5.0
    alpha_max: float = 0.05
    courant_factor: float = 0.98
    frequencies_hz: tuple = ()
    huygens_offset_cells: int = 3
    decay_db: float = 60.0
    max_steps: int = 20000
    check_every: int = 50
    progress_every: int = field(default_factory=lambda: int(os.getenv("TARRAY_PROGRESS_EVERY", 500)))
    workers: int = field(default_factory=lambda: int(os.getenv("TARRAY_THREADS", 1)))
    reference_frequency_hz: float = 10e9
    cell_budget: int = None
    probes: tuple = ()

    def cpml(self, cells):
        return CPMLSettings(cells=cells, order=self.pml_order, kappa_max=self.kappa_max,
                            alpha_max=self.alpha_max)

    def to_dict(self):
        data = asdict(self)
        data["frequencies_hz"] = list(self.frequencies_hz)
        data["probes"] = [list(p) for p in self.probes]
        return data


@dataclass
class FieldState:
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, shape):
        nx, ny, nz = shape
        return cls(
            ex=np.zeros((nx, ny + 1, nz + 1)),
            ey=np.zeros((nx + 1, ny, nz + 1)),
            ez=np.zeros((nx + 1, ny + 1, nz)),
            hx=np.zeros((nx + 1, ny, nz)),
            hy=np.zeros((nx, ny + 1, nz)),
            hz=np.zeros((nx, ny, nz + 1)),
        )

    def as_dict(self):
        return {name: getattr(self, name) for name in E_COMPONENTS + H_COMPONENTS}


@dataclass
class LumpedPort:
    """Run of ``n_cells`` edges along ``axis`` starting at physical node ``start``."""

    start: tuple
    axis: str
    n_cells: int
    resistance_ohms: float = 50.0
    load_ohms: float = None

    def __post_init__(self):
        if not self.resistance_ohms > 0.0:
            raise PortConfigurationError("port internal resistance must be > 0 ohm")
        if self.n_cells < 1:
            raise PortConfigurationError("port must span at least one edge")

    @classmethod
    def from_scene(cls, scene, material):
        placement = scene.port
        if placement is None:
            raise PortConfigurationError(f"scene '{scene.name}' has no port")
        axis = AXES.index(placement.axis)
        step = material.spacing[axis]
        n_cells = max(1, int(round(scene.port_length_mm() * MM / step)))
        start = material.node_index(tuple(v * MM for v in placement.position_mm))
        port = cls(start, placement.axis, n_cells, placement.resistance_ohms, placement.load_ohms)
        port.check(material)
        return port

    def index(self, offset=0):
        idx = [v + offset for v in self.start]
        axis = AXES.index(self.axis)
        idx[axis] = slice(idx[axis], idx[axis] + self.n_cells)
        return tuple(idx)

    def check(self, material):
        axis = AXES.index(self.axis)
        end = self.start[axis] + self.n_cells
        if end > material.shape[axis]:
            raise PortConfigurationError(f"port runs past the grid edge along {self.axis}")
        mask = getattr(material, f"pec_{self.axis}")[self.index()]
        if np.any(mask):
            raise PortConfigurationError(f"port at node {self.start} lies on a PEC edge")

    def geometry(self, spacing):
        """(edge length, transverse cell area) in meters."""
        axis = AXES.index(self.axis)
        others = [spacing[a] for a in range(3) if a != axis]
        return spacing[axis], others[0] * others[1]

    def to_dict(self):
        return asdict(self)


@dataclass
class PortRecord:
    dt: float
    resistance_ohms: float = 50.0
    source: SourceSpec = None
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    voltages: list = field(default_factory=list)
    currents: list = field(default_factory=list)

    def append(self, step, t, v, i):
        self.steps.append(step)
        self.times.append(t)
        self.voltages.append(v)
        self.currents.append(i)

    def __len__(self):
        return len(self.steps)

    @property
    def v(self):
        return np.asarray(self.voltages, dtype=float)

    @property
    def i(self):
        return np.asarray(self.currents, dtype=float)

    @property
    def t(self):
        return np.asarray(self.times, dtype=float)

    def to_frame(self):
        return pd.DataFrame({
            "step": np.asarray(self.steps, dtype=np.int64),
            "time_s": self.t,
            "v_volts": self.v,
            "i_amps": self.i,
        })

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def read_csv(cls, path, dt=None, resistance_ohms=50.0, source=None):
        frame = pd.read_csv(path)
        if dt is None:
            dt = float(np.diff(frame["time_s"]).mean()) if len(frame) > 1 else 0.0
        return cls(dt=dt, resistance_ohms=resistance_ohms, source=source,
                   steps=frame["step"].astype(int).tolist(),
                   times=frame["time_s"].astype(float).tolist(),
                   voltages=frame["v_volts"].astype(float).tolist(),
                   currents=frame["i_amps"].astype(float).tolist())


def _edge_average(cells, axis):
    """Average cell values onto the edges along ``axis`` (up to four neighbors)."""
    a, b = [ax for ax in range(3) if ax != axis]
    pad = [(0, 0)] * 3
    pad[a] = pad[b] = (1, 1)
    padded = np.pad(cells, pad, mode="edge")
    out = 0.0
    for da in (0, 1):
        for db in (0, 1):
            sl = [slice(None)] * 3
            sl[a] = slice(da, padded.shape[a] - 1 + da)
            sl[b] = slice(db, padded.shape[b] - 1 + db)
            out = out + padded[tuple(sl)]
    return 0.25 * out


def _partition(n, workers):
    bounds = np.linspace(0, n, max(1, workers) + 1).round().astype(int)
    slabs = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    return [(a, b, idx == len(slabs) - 1) for idx, (a, b) in enumerate(slabs)]


class YeeSolver:
    def __init__(self, material, grid, source=None, port=None, settings=None):
        self.material = material
        self.grid = grid
        self.source = source or SourceSpec()
        self.settings = settings or SimulationSettings()
        self.dt = compute_timestep(grid)
        self.pml = p = grid.pml_cells
        self.shape = grid.total_shape
        self.spacing = grid.spacing
        self.inv = tuple(1.0 / d for d in self.spacing)
        self.db = self.dt / mu_0
        self.origin_m = tuple(o - p * d for o, d in zip(material.origin_m, self.spacing))
        self.cell_volume = self.spacing[0] * self.spacing[1] * self.spacing[2]

        pad = [(p, p)] * 3
        self.eps_r = np.pad(material.eps_r, pad, mode="edge")
        self.sigma = np.pad(material.sigma, pad, mode="edge")
        self.port = port
        self._build_coefficients(material, pad)

        self.cpml = CPML(self.shape, self.spacing, self.dt, self.settings.cpml(p))
        self.state = FieldState.zeros(self.shape)
        self.record = PortRecord(self.dt, port.resistance_ohms if port else 50.0, self.source)
        self.energy_history = []
        self.huygens = None
        self.probes = {}
        for comp, idx in self.settings.probes:
            self.probes[(comp, tuple(int(v) + p for v in idx))] = []

        self.workers = max(1, int(self.settings.workers))
        self.slabs = _partition(self.shape[0], self.workers)
        self._executor = ThreadPoolExecutor(max_workers=self.workers) if len(self.slabs) > 1 else None

    # -- set-up -----------------------------------------------------------

    def _build_coefficients(self, material, pad):
        self.ca, self.cb = {}, {}
        nx, ny, nz = self.shape
        for axis, name in enumerate(E_COMPONENTS):
            eps = epsilon_0 * _edge_average(self.eps_r, axis)
            sigma = _edge_average(self.sigma, axis)
            pec = np.pad(getattr(material, f"pec_{AXES[axis]}"), pad, mode="constant")
            if self.port is not None and self.port.axis == AXES[axis]:
                sigma = sigma.copy()
                sigma[self.port.index(self.pml)] += self._port_conductance()
            half = sigma * self.dt / (2.0 * eps)
            ca = (1.0 - half) / (1.0 + half)
            cb = (self.dt / eps) / (1.0 + half)
            ca[pec] = 0.0
            cb[pec] = 0.0
            for other in range(3):
                if other == axis:
                    continue
                sl = [slice(None)] * 3
                sl[other] = [0, -1]
                ca[tuple(sl)] = 0.0
                cb[tuple(sl)] = 0.0
            self.ca[name] = ca
            self.cb[name] = cb
        if self.port is not None:
            idx = self.port.index(self.pml)
            if np.any(self.cb[f"e{self.port.axis}"][idx] == 0.0):
                raise PortConfigurationError(f"port at node {self.port.start} lies on the domain boundary")
            length, area = self.port.geometry(self.spacing)
            self._port_length = length
            self._port_drive = self.cb[f"e{self.port.axis}"][idx] / (self.port.resistance_ohms * area)

    def _port_conductance(self):
        """Per-edge conductivity of the source resistor plus the optional load."""
        length, area = self.port.geometry(self.spacing)
        n = self.port.n_cells
        g = length / (self.port.resistance_ohms / n * area)
        if self.port.load_ohms is not None:
            g += length / (self.port.load_ohms / n * area)
        return g

    def attach_huygens(self, frequencies_hz, offset_cells=3):
        p = self.pml
        bounds = [(p + offset_cells, n - p - offset_cells) for n in self.shape]
        self.huygens = HuygensBox(bounds, self.spacing, self.origin_m, frequencies_hz, self.dt)
        return self.huygens

    # -- updates ----------------------------------------------------------

    def _run_slabs(self, update):
        if self._executor is None:
            for slab in self.slabs:
                update(*slab)
        else:
            list(self._executor.map(lambda s: update(*s), self.slabs))

    def _update_h(self, a, b, last):
        s = self.state
        idx, idy, idz = self.inv
        db = self.db
        bn = b + 1 if last else b
        s.hx[a:bn] -= db * ((s.ez[a:bn, 1:, :] - s.ez[a:bn, :-1, :]) * idy
                            - (s.ey[a:bn, :, 1:] - s.ey[a:bn, :, :-1]) * idz)
        s.hy[a:b] -= db * ((s.ex[a:b, :, 1:] - s.ex[a:b, :, :-1]) * idz
                           - (s.ez[a + 1:b + 1, :, :] - s.ez[a:b, :, :]) * idx)
        s.hz[a:b] -= db * ((s.ey[a + 1:b + 1, :, :] - s.ey[a:b, :, :]) * idx
                           - (s.ex[a:b, 1:, :] - s.ex[a:b, :-1, :]) * idy)

    def _update_e(self, a, b, last):
        s = self.state
        idx, idy, idz = self.inv
        ca, cb = self.ca, self.cb
        core = (slice(a, b), slice(1, -1), slice(1, -1))
        s.ex[core] = ca["ex"][core] * s.ex[core] + cb["ex"][core] * (
            (s.hz[a:b, 1:, 1:-1] - s.hz[a:b, :-1, 1:-1]) * idy
            - (s.hy[a:b, 1:-1, 1:] - s.hy[a:b, 1:-1, :-1]) * idz)

        i0, i1 = max(a, 1), min(b + 1 if last else b, self.shape[0])
        if i1 <= i0:
            return
        core = (slice(i0, i1), slice(None), slice(1, -1))
        s.ey[core] = ca["ey"][core] * s.ey[core] + cb["ey"][core] * (
            (s.hx[i0:i1, :, 1:] - s.hx[i0:i1, :, :-1]) * idz
            - (s.hz[i0:i1, :, 1:-1] - s.hz[i0 - 1:i1 - 1, :, 1:-1]) * idx)
        core = (slice(i0, i1), slice(1, -1), slice(None))
        s.ez[core] = ca["ez"][core] * s.ez[core] + cb["ez"][core] * (
            (s.hy[i0:i1, 1:-1, :] - s.hy[i0 - 1:i1 - 1, 1:-1, :]) * idx
            - (s.hx[i0:i1, 1:, :] - s.hx[i0:i1, :-1, :]) * idy)

    def field_energy(self, h_previous):
        """Leapfrog-conserved energy 1/2 eps E^n.E^n + 1/2 mu0 H^(n-1/2).H^(n+1/2), in joules."""
        s = self.state
        electric = 0.0
        for axis, name in enumerate(E_COMPONENTS):
            eps = _edge_average(self.eps_r, axis)
            electric += float(np.sum(eps * getattr(s, name) ** 2))
        magnetic = sum(float(np.sum(h_previous[name] * getattr(s, name))) for name in H_COMPONENTS)
        return 0.5 * self.cell_volume * (epsilon_0 * electric + mu_0 * magnetic)

    def port_loop_current(self):
        """Circulating H line integral around the port edges (mean over the run of edges), in amperes."""
        port = self.port
        axis = AXES.index(port.axis)
        b, c = (axis + 1) % 3, (axis + 2) % 3
        h_b = getattr(self.state, f"h{AXES[b]}")
        h_c = getattr(self.state, f"h{AXES[c]}")
        idx = port.index(self.pml)

        def behind(along):
            shifted = list(idx)
            shifted[along] -= 1
            return tuple(shifted)

        loop = ((h_c[idx] - h_c[behind(b)]) * self.spacing[c]
                - (h_b[idx] - h_b[behind(c)]) * self.spacing[b])
        return float(np.mean(loop))

    def excite_and_record_port(self, step, e_before):
        """Drive the port source for step ``step`` and record v, i at (step + 1/2) dt."""
        port = self.port
        idx = port.index(self.pml)
        comp = getattr(self.state, f"e{port.axis}")
        t = (step + 0.5) * self.dt
        vs = float(self.source.waveform(t))
        comp[idx] -= self._port_drive * vs
        v = -float(np.sum(0.5 * (comp[idx] + e_before))) * self._port_length
        if not math.isfinite(v):
            raise DivergenceError(step, "port voltage is not finite")
        # H is at step + 1/2 here; the optional load resistor shares the port edges
        i = self.port_loop_current()
        if port.load_ohms is not None:
            i += v / port.load_ohms
        self.record.append(step, t, v, i)
        return v, i

    def step_fields(self):
        """Advance one full step; returns the energy if it was sampled this step."""
        s = self.state
        n = s.step
        check = self.settings.check_every
        sample_energy = bool(check) and n % check == 0
        h_previous = {name: getattr(s, name).copy() for name in H_COMPONENTS} if sample_energy else None

        self._run_slabs(self._update_h)
        apply_cpml(s, self.cpml, "h", self.db)

        energy = None
        if sample_energy:
            energy = self.field_energy(h_previous)
            if not math.isfinite(energy):
                raise DivergenceError(n, "field energy is not finite")
            self.energy_history.append((n, energy))

        e_before = None
        if self.port is not None:
            e_before = getattr(s, f"e{self.port.axis}")[self.port.index(self.pml)].copy()
        self._run_slabs(self._update_e)
        apply_cpml(s, self.cpml, "e", self.cb)
        if self.port is not None:
            self.excite_and_record_port(n, e_before)

        for (comp, idx), values in self.probes.items():
            values.append(float(getattr(s, comp)[idx]))
        if self.huygens is not None:
            self.huygens.accumulate(s.as_dict(), n)
        s.step = n + 1
        return energy

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None


@dataclass
class RunOutput:
    scene_name: str
    scene_fingerprint: str
    record: PortRecord
    huygens: object
    grid: GridSpec
    dt: float
    source: SourceSpec
    settings: SimulationSettings
    port: LumpedPort
    n_steps: int
    decayed: bool
    energy_history: list
    probes: dict
    warnings: list
    started_at: str
    elapsed_s: float

    def to_dict(self):
        return {
            "scene": {"name": self.scene_name, "sha256": self.scene_fingerprint},
            "grid": asdict(self.grid),
            "dt_s": self.dt,
            "source": self.source.to_dict(),
            "settings": self.settings.to_dict(),
            "port": self.port.to_dict(),
            "n_steps": self.n_steps,
            "decayed": self.decayed,
            "energy_history": [[int(n), float(w)] for n, w in self.energy_history],
            "huygens_frequencies_hz": [] if self.huygens is None else
            [float(f) for f in self.huygens.frequencies_hz],
            "warnings": list(self.warnings),
            "metadata": {"started_at": self.started_at, "elapsed_s": round(self.elapsed_s, 3)},
        }


def _pattern_frequencies(scene, settings, source):
    if scene.boundary != "open" or scene.metadata.get("huygens") is False:
        return ()
    freqs = settings.frequencies_hz or scene.metadata.get("frequencies_hz") or DEFAULT_PATTERN_FREQUENCIES_HZ
    return tuple(f for f in freqs if source.f_min_hz <= f <= source.f_max_hz)


def _huygens_encloses(scene, material, offset_cells, settings):
    """True when every metal, wire and port point lies inside the Huygens box."""
    if scene.domain_mm is None:
        return math.ceil(settings.air_margin_mm / settings.cell_mm - 1e-9) > offset_cells
    points = [scene.port.position_mm]
    points += [w.start_mm for w in scene.wires] + [w.end_mm for w in scene.wires]
    for i, (lo, hi) in enumerate(zip(*scene.domain_mm)):
        inner_lo = lo + (offset_cells + 0.5) * material.spacing[i] / MM
        inner_hi = hi - (offset_cells + 0.5) * material.spacing[i] / MM
        if any(not inner_lo <= pt[i] <= inner_hi for pt in points):
            return False
    return True


def run_simulation(scene, grid=None, source=None, n_steps="auto", settings=None):
    """
    Voxelize ``scene``, run the time loop and return the port record plus
    Huygens spectra. ``n_steps="auto"`` stops once the port energy, summed
    over windows of ``check_every`` steps, has fallen ``decay_db`` below its
    peak window after the source has ended, or at ``max_steps``. Cell counts
    of ``grid`` are taken from the voxelization.
    """
    settings = settings or SimulationSettings()
    source = source or SourceSpec()
    scene.validate()
    started = time.time()
    started_at = datetime.now().isoformat(timespec="seconds")

    closed = scene.boundary == "pec"
    material = voxelize(scene, settings.cell_mm,
                        margin_mm=0.0 if closed else settings.air_margin_mm,
                        cell_z_mm=settings.cell_z_mm,
                        reference_frequency_hz=settings.reference_frequency_hz,
                        cell_budget=settings.cell_budget)
    warnings = list(material.warnings)
    pml_cells = 0 if closed else (settings.pml_cells if grid is None else grid.pml_cells)
    courant = settings.courant_factor if grid is None else grid.courant_factor
    grid = GridSpec.from_material(material, pml_cells, courant)

    port = LumpedPort.from_scene(scene, material)
    solver = YeeSolver(material, grid, source, port, settings)

    frequencies = _pattern_frequencies(scene, settings, source)
    if frequencies:
        solver.attach_huygens(frequencies, settings.huygens_offset_cells)
        if not _huygens_encloses(scene, material, settings.huygens_offset_cells, settings):
            message = "Huygens box does not enclose the whole structure; far fields will be wrong"
            print(f"⚠️  {message}")
            warnings.append(message)

    auto = n_steps == "auto"
    cap = settings.max_steps if auto else int(n_steps)
    if cap < 0:
        raise SolverError(f"step count must be >= 0, got {n_steps}")
    floor = 10.0 ** (-settings.decay_db / 10.0)
    window = settings.check_every or DECAY_WINDOW_STEPS
    resistance = port.resistance_ohms
    progress = settings.progress_every
    total = grid.total_shape
    print(f"🚀 {scene.name}: {total[0]} x {total[1]} x {total[2]} cells, dt = {solver.dt:.4e} s, "
          f"{'auto (cap ' + format(cap, ',') + ')' if auto else format(cap, ',')} steps")

    peak = 0.0
    decayed = False
    latest = 0.0
    port_energy = 0.0
    try:
        for n in range(cap):
            energy = solver.step_fields()
            if energy is not None:
                latest = energy
            v, i = solver.record.voltages[-1], solver.record.currents[-1]
            port_energy += v * v + (i * resistance) ** 2
            if (n + 1) % window == 0:
                peak = max(peak, port_energy)
                past_source = (n + 1) * solver.dt > source.end_time_s
                if past_source and peak > 0.0 and port_energy <= peak * floor:
                    decayed = True
                    if auto:
                        break
                port_energy = 0.0
            if progress and (n + 1) % progress == 0:
                print(f"⏱️  step {n + 1:,}  energy {latest:.3e} J")
    finally:
        solver.close()

    if cap > 0 and not decayed:
        if peak == 0.0 and port_energy == 0.0:
            decayed = True
        else:
            message = (f"port energy did not decay {settings.decay_db:g} dB within "
                       f"{solver.state.step:,} steps")
            print(f"⚠️  {message}")
            warnings.append(message)

    probes = {f"{comp}[{','.join(str(v - pml_cells) for v in idx)}]": np.asarray(values)
              for (comp, idx), values in solver.probes.items()}
    return RunOutput(
        scene_name=scene.name,
        scene_fingerprint=scene.fingerprint(),
        record=solver.record,
        huygens=None if solver.huygens is None else solver.huygens.data(),
        grid=grid,
        dt=solver.dt,
        source=source,
        settings=replace(settings, frequencies_hz=tuple(frequencies)),
        port=port,
        n_steps=solver.state.step,
        decayed=decayed,
        energy_history=solver.energy_history,
        probes=probes,
        warnings=warnings,
        started_at=started_at,
        elapsed_s=time.time() - started,
    )
