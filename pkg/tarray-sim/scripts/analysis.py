"""
Frequency-domain post-processing of a run: S11, -10 dB bands, ringing
frequencies, efficiency bookkeeping and the summary metrics.

Port waves follow the power-wave split a = (V + Z0 I) / 2 sqrt(Z0),
b = (V - Z0 I) / 2 sqrt(Z0); S11 = B(f) / A(f).
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import skrf
from scipy import linalg
from scipy.fft import rfft, rfftfreq
from scipy.signal import find_peaks
from scipy.signal.windows import hann

from errors import AnalysisError, EnergyAccountingError

# Candidate 6G mid-band allocations, Hz
ALLOCATIONS_6G = {
    "4.4-4.8 GHz": (4.4e9, 4.8e9),
    "6.425-7.125 GHz": (6.425e9, 7.125e9),
    "7.125-7.25 GHz": (7.125e9, 7.25e9),
    "7.75-8.4 GHz": (7.75e9, 8.4e9),
    "14.8-15.35 GHz": (14.8e9, 15.35e9),
}

PASSIVITY_HEADROOM = 1e-3
MASK_FLOOR = 1e-6
TAIL_FRACTION = 0.1


def _next_pow2(n):
    return 1 << max(0, int(n - 1).bit_length())


@dataclass
class SParamResult:
    frequencies_hz: np.ndarray
    s11: np.ndarray
    z0: float = 50.0
    masked: np.ndarray = None
    window: str = "rectangular"
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.frequencies_hz = np.asarray(self.frequencies_hz, dtype=float)
        self.s11 = np.asarray(self.s11, dtype=complex)
        if self.masked is None:
            self.masked = ~np.isfinite(self.s11)
        if len(self.frequencies_hz) > 1 and np.any(np.diff(self.frequencies_hz) <= 0.0):
            raise AnalysisError("S11 frequencies must be strictly increasing")

    def __len__(self):
        return len(self.frequencies_hz)

    @property
    def valid(self):
        return ~self.masked

    @property
    def s11_db(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 20.0 * np.log10(np.abs(self.s11))

    @property
    def vswr(self):
        mag = np.abs(self.s11)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(mag < 1.0, (1.0 + mag) / (1.0 - mag), np.inf)

    def at(self, f_hz):
        """S11 (dB) at the nearest unmasked sample."""
        f = self.frequencies_hz[self.valid]
        i = int(np.argmin(np.abs(f - f_hz)))
        return float(f[i]), float(self.s11_db[self.valid][i])

    def to_frame(self):
        return pd.DataFrame({
            "freq_hz": self.frequencies_hz,
            "s11_db": self.s11_db,
            "s11_re": self.s11.real,
            "s11_im": self.s11.imag,
        })

    def to_network(self):
        keep = self.valid
        frequency = skrf.Frequency.from_f(self.frequencies_hz[keep] / 1e9, unit="ghz")
        return skrf.Network(frequency=frequency, s=self.s11[keep][:, None, None], z0=self.z0, name="s11")

    def write_touchstone(self, directory, name="s11"):
        """Touchstone v1 one-port file ``<name>.s1p``, GHz, real/imaginary."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        network = self.to_network()
        network.write_touchstone(filename=name, dir=str(directory), form="ri", skrf_comment=False)
        return directory / f"{name}.s1p"


@dataclass(frozen=True)
class Band:
    f_low_hz: float
    f_high_hz: float
    threshold_db: float = -10.0

    @property
    def center_hz(self):
        return 0.5 * (self.f_low_hz + self.f_high_hz)

    @property
    def bandwidth_hz(self):
        return self.f_high_hz - self.f_low_hz

    @property
    def fractional_bandwidth(self):
        return self.bandwidth_hz / self.center_hz

    def contains(self, f_hz):
        return self.f_low_hz <= f_hz <= self.f_high_hz

    def to_dict(self):
        return asdict(self)


def record_decayed(record, decay_db=60.0):
    """Whether the port voltage tail sits ``decay_db`` (energy) below its peak."""
    v = np.abs(record.v)
    if len(v) == 0 or v.max() == 0.0:
        return True
    tail = v[-max(1, len(v) // 20):]
    return bool(tail.max() ** 2 <= v.max() ** 2 * 10.0 ** (-decay_db / 10.0))


def _taper(n):
    """Ones with a half-Hann roll-off over the last tenth of the record."""
    w = np.ones(n)
    m = max(1, int(math.ceil(TAIL_FRACTION * n)))
    w[n - m:] = hann(2 * m, sym=False)[m:]
    return w


def s11_from_port(record, z0=50.0, window="auto", pad_factor=4, decayed=None, f_min_hz=None, f_max_hz=None):
    """
    S11 on the zero-padded FFT grid, restricted to the source band.
    ``window`` is "rectangular", "taper" or "auto" (rectangular only when
    the record has decayed 60 dB).
    """
    if pad_factor < 1:
        raise AnalysisError(f"pad_factor must be >= 1, got {pad_factor}")
    if len(record) < 2:
        raise AnalysisError("port record needs at least two samples")
    if window not in ("auto", "rectangular", "taper"):
        raise AnalysisError(f"unknown window '{window}'")
    source = record.source
    f_min_hz = f_min_hz if f_min_hz is not None else (source.f_min_hz if source else 0.0)
    f_max_hz = f_max_hz if f_max_hz is not None else (source.f_max_hz if source else np.inf)

    if window == "auto":
        decayed = record_decayed(record) if decayed is None else decayed
        window = "rectangular" if decayed else "taper"
    n = len(record)
    w = np.ones(n) if window == "rectangular" else _taper(n)

    root = 2.0 * math.sqrt(z0)
    a = (record.v + z0 * record.i) / root
    b = (record.v - z0 * record.i) / root
    n_fft = _next_pow2(n) * int(pad_factor)
    spec_a = rfft(a * w, n_fft)
    spec_b = rfft(b * w, n_fft)
    freqs = rfftfreq(n_fft, record.dt)

    band = (freqs >= f_min_hz) & (freqs <= f_max_hz)
    freqs, spec_a, spec_b = freqs[band], spec_a[band], spec_b[band]
    warnings = []
    peak = np.abs(spec_a).max() if len(spec_a) else 0.0
    masked = np.abs(spec_a) < MASK_FLOOR * peak if peak > 0.0 else np.ones(len(spec_a), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        s11 = np.where(masked, np.nan + 0j, spec_b / spec_a)
    if masked.any():
        message = f"{int(masked.sum())} S11 samples masked: incident spectrum below the numerical floor"
        print(f"⚠️  {message}")
        warnings.append(message)
    worst = np.nanmax(np.abs(s11)) if (~masked).any() else 0.0
    if worst > 1.0 + PASSIVITY_HEADROOM:
        message = f"|S11| reaches {worst:.4f}, above the passivity headroom"
        print(f"⚠️  {message}")
        warnings.append(message)
    return SParamResult(frequencies_hz=freqs, s11=s11, z0=z0, masked=masked, window=window, warnings=warnings)


def find_bands(s, threshold_db=-10.0):
    """Maximal intervals with S11 <= threshold, edges linearly interpolated."""
    f = s.frequencies_hz[s.valid]
    db = s.s11_db[s.valid]
    below = db <= threshold_db
    bands = []
    n = len(f)
    i = 0
    while i < n:
        if not below[i]:
            i += 1
            continue
        i0 = i
        while i + 1 < n and below[i + 1]:
            i += 1
        i1 = i
        f_low = f[i0]
        if i0 > 0:
            f_low = f[i0] - (db[i0] - threshold_db) * (f[i0] - f[i0 - 1]) / (db[i0] - db[i0 - 1])
        f_high = f[i1]
        if i1 < n - 1:
            f_high = f[i1] + (threshold_db - db[i1]) * (f[i1 + 1] - f[i1]) / (db[i1 + 1] - db[i1])
        if f_high > f_low:
            bands.append(Band(float(f_low), float(f_high), threshold_db))
        i += 1
    return bands


def aggregate_bandwidth(bands):
    return float(sum(b.bandwidth_hz for b in bands))


def allocation_coverage(bands):
    """Fraction of each candidate allocation covered by the bands."""
    coverage = {}
    for name, (lo, hi) in ALLOCATIONS_6G.items():
        covered = sum(max(0.0, min(hi, b.f_high_hz) - max(lo, b.f_low_hz)) for b in bands)
        coverage[name] = covered / (hi - lo)
    return coverage


def estimate_resonances(record, f_min_hz, f_max_hz, start_time_s=None, max_order=40, rel_tol=1e-7):
    """
    Matrix-pencil estimate of the ringing in the port voltage after the
    source has ended. Returns dicts (frequency_hz, damping_per_s, amplitude)
    inside [f_min, f_max], strongest first.
    """
    if start_time_s is None:
        start_time_s = record.source.end_time_s if record.source else 0.0
    t = record.t
    v = record.v[t >= start_time_s]
    if len(v) < 8:
        raise AnalysisError("too few samples after the source to estimate resonances")
    q = max(1, int(1.0 / (4.0 * f_max_hz * record.dt)))
    # decimated Nyquist stays at or above 2 f_max
    y = v[::q]
    dt = record.dt * q
    y = y[:2000]
    n = len(y)
    pencil = n // 3
    hankel = linalg.hankel(y[:n - pencil], y[n - pencil - 1:])
    _, sv, vh = linalg.svd(hankel, full_matrices=False)
    order = int(min(max_order, np.sum(sv > rel_tol * sv[0])))
    if order == 0:
        return []
    basis = vh[:order].conj().T
    poles = linalg.eigvals(linalg.pinv(basis[:-1]) @ basis[1:])
    vander = poles[None, :] ** np.arange(n)[:, None]
    amplitudes, *_ = linalg.lstsq(vander, y.astype(complex))

    found = []
    for z, amp in zip(poles, amplitudes):
        f = float(np.angle(z) / (2.0 * np.pi * dt))
        if f_min_hz <= f <= f_max_hz:
            found.append({"frequency_hz": f,
                          "damping_per_s": float(-np.log(np.abs(z)) / dt),
                          "amplitude": float(2.0 * np.abs(amp))})
    return sorted(found, key=lambda r: r["amplitude"], reverse=True)


def accepted_power(record, f_hz):
    """1/2 Re(V I*) at ``f_hz`` from direct DFTs of the port samples."""
    phase = np.exp(-2j * np.pi * f_hz * record.t) * record.dt
    v = np.sum(record.v * phase)
    i = np.sum(record.i * phase)
    return 0.5 * float(np.real(v * np.conj(i)))


def radiation_efficiency(radiated_power_w, input_power_w):
    """P_rad / P_in, clamped to 1 when it exceeds 1 by at most 1%."""
    if not input_power_w > 0.0:
        raise AnalysisError(f"accepted input power must be > 0 W, got {input_power_w}")
    eta = radiated_power_w / input_power_w
    if eta > 1.01:
        raise EnergyAccountingError(
            f"radiated power exceeds accepted power by {100 * (eta - 1):.2f}%")
    if eta > 1.0:
        print(f"⚠️  efficiency {eta:.4f} clamped to 1")
        return 1.0
    return eta


def side_lobes(pattern, phi_deg):
    """Main lobe and highest side lobe of the ``phi_deg`` cut, in dBi."""
    angles, gain = pattern.cut(phi_deg)
    main = int(np.argmax(gain))
    peaks, _ = find_peaks(gain)
    others = [p for p in peaks if p != main]
    result = {"phi_deg": phi_deg, "main_lobe_dbi": float(gain[main]), "main_lobe_theta_deg": float(angles[main]),
              "side_lobe_dbi": None, "side_lobe_theta_deg": None, "relative_db": None}
    if others:
        side = max(others, key=lambda p: gain[p])
        result.update(side_lobe_dbi=float(gain[side]), side_lobe_theta_deg=float(angles[side]),
                      relative_db=float(gain[side] - gain[main]))
    return result


@dataclass
class AntennaMetrics:
    min_s11_db: float
    min_s11_frequency_hz: float
    peak_gain_dbi: float
    peak_gain_frequency_hz: float
    gain_by_frequency: list
    bands: list
    band_efficiency: list
    threshold_db: float = -10.0
    aggregate_bandwidth_hz: float = 0.0
    allocation_coverage: dict = field(default_factory=dict)
    side_lobes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        data = asdict(self)
        data["bands"] = [dict(b.to_dict(), center_hz=b.center_hz, bandwidth_hz=b.bandwidth_hz,
                              fractional_bandwidth=b.fractional_bandwidth) for b in self.bands]
        return data

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def summarize(s, patterns, threshold_db=-10.0):
    valid = s.valid
    if valid.any():
        f = s.frequencies_hz[valid]
        db = s.s11_db[valid]
        i = int(np.argmin(db))
        min_db, min_f = float(db[i]), float(f[i])
    else:
        min_db = min_f = None

    ordered = sorted(patterns, key=lambda p: p.frequency_hz)
    gains = [(float(p.frequency_hz), p.peak_gain_dbi) for p in ordered]
    peak_gain = peak_f = None
    if gains:
        j = int(np.argmax([g for _, g in gains]))
        peak_f, peak_gain = gains[j]

    bands = find_bands(s, threshold_db)
    band_efficiency = []
    for band in bands:
        values = [p.efficiency for p in ordered if band.contains(p.frequency_hz) and p.efficiency is not None]
        band_efficiency.append(float(np.mean(values)) if values else None)

    lobes = []
    if peak_f is not None:
        best = ordered[j]
        lobes = [dict(side_lobes(best, phi), frequency_hz=best.frequency_hz) for phi in (0.0, 90.0)]

    warnings = list(s.warnings) + [w for p in ordered for w in p.warnings]
    return AntennaMetrics(
        min_s11_db=min_db, min_s11_frequency_hz=min_f,
        peak_gain_dbi=peak_gain, peak_gain_frequency_hz=peak_f,
        gain_by_frequency=[{"frequency_hz": f, "peak_gain_dbi": g} for f, g in gains],
        bands=bands, band_efficiency=band_efficiency, threshold_db=threshold_db,
        aggregate_bandwidth_hz=aggregate_bandwidth(bands),
        allocation_coverage=allocation_coverage(bands),
        side_lobes=lobes, warnings=warnings,
    )
