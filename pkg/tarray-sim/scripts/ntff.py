"""
Near-to-far-field transform of Huygens-box spectra.

Equivalent currents J = n x H and M = -n x E on the box faces are summed
with the far-zone phase exp(+jk r.r') into the radiation vectors N and L.
Far fields are stored at r = 1 m with the exp(-jkr) factor dropped:

    E_theta = -jk/(4 pi) (L_phi + eta N_theta)
    E_phi   =  jk/(4 pi) (L_theta - eta N_phi)
    U       = |E|^2 / (2 eta)

Radiated power is the Poynting flux through the box, so directivity does not
depend on the angular grid.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.constants import c as C0
from scipy.constants import physical_constants
from scipy.integrate import trapezoid

from analysis import radiation_efficiency
from errors import FrequencyLookupError

ETA0 = physical_constants["characteristic impedance of vacuum"][0]
DEFAULT_THETA_DEG = np.linspace(0.0, 180.0, 181)
DEFAULT_PHI_DEG = np.linspace(0.0, 360.0, 73)

# Direction x source-point products evaluated per chunk
CHUNK_ELEMENTS = 4_000_000


def _to_db(linear):
    return 10.0 * np.log10(np.maximum(linear, 1e-30))


@dataclass
class FarFieldPattern:
    frequency_hz: float
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray
    directivity: np.ndarray
    gain: np.ndarray
    radiated_power_w: float
    input_power_w: float = None
    efficiency: float = None
    warnings: list = field(default_factory=list)

    @property
    def directivity_dbi(self):
        return _to_db(self.directivity)

    @property
    def gain_dbi(self):
        return _to_db(self.gain)

    @property
    def peak_gain_dbi(self):
        return float(_to_db(self.gain.max()))

    @property
    def peak_directivity_dbi(self):
        return float(_to_db(self.directivity.max()))

    def peak_direction(self):
        i, j = np.unravel_index(np.argmax(self.gain), self.gain.shape)
        return float(self.theta_deg[i]), float(self.phi_deg[j])

    def sphere_average(self):
        """(1/4 pi) of the integral of D over the sphere."""
        theta = np.radians(self.theta_deg)
        phi = np.radians(self.phi_deg)
        inner = trapezoid(self.directivity * np.sin(theta)[:, None], theta, axis=0)
        return float(trapezoid(inner, phi) / (4.0 * np.pi))

    def value_at(self, theta_deg, phi_deg, quantity="directivity"):
        i = int(np.argmin(np.abs(self.theta_deg - theta_deg)))
        j = int(np.argmin(np.abs(self.phi_deg - phi_deg)))
        return float(getattr(self, quantity)[i, j])

    def cut(self, phi_deg):
        """Gain (dBi) along theta in the plane phi = phi_deg, both half planes joined."""
        j = int(np.argmin(np.abs(self.phi_deg - phi_deg)))
        k = int(np.argmin(np.abs(self.phi_deg - (phi_deg + 180.0) % 360.0)))
        angles = np.concatenate([-self.theta_deg[::-1], self.theta_deg[1:]])
        values = np.concatenate([self.gain_dbi[::-1, k], self.gain_dbi[1:, j]])
        return angles, values

    def to_frame(self):
        theta, phi = np.meshgrid(self.theta_deg, self.phi_deg, indexing="ij")
        return pd.DataFrame({
            "theta_deg": theta.ravel(),
            "phi_deg": phi.ravel(),
            "directivity_dbi": self.directivity_dbi.ravel(),
            "gain_dbi": self.gain_dbi.ravel(),
        })


def radiated_power(faces, index):
    """Time-averaged Poynting flux out of the box at frequency ``index``."""
    total = 0.0
    for face in faces:
        e, h = face.e[index], face.h[index]
        flux = np.cross(e, np.conj(h)) @ face.normal
        total += 0.5 * float(np.real(flux.sum())) * face.area
    return total


def radiation_vectors(faces, index, k, directions):
    """N and L (each (ndir, 3)) for unit ``directions`` (ndir, 3)."""
    n_vec = np.zeros((len(directions), 3), dtype=complex)
    l_vec = np.zeros((len(directions), 3), dtype=complex)
    for face in faces:
        normal = np.broadcast_to(face.normal, face.e[index].shape)
        j_s = np.cross(normal, face.h[index]) * face.area
        m_s = -np.cross(normal, face.e[index]) * face.area
        step = max(1, CHUNK_ELEMENTS // max(face.n_points, 1))
        for start in range(0, len(directions), step):
            chunk = directions[start:start + step]
            phase = np.exp(1j * k * (chunk @ face.positions.T))
            n_vec[start:start + step] += phase @ j_s
            l_vec[start:start + step] += phase @ m_s
    return n_vec, l_vec


def ntff_transform(huygens, f_hz, theta_deg=None, phi_deg=None, input_power_w=None):
    """Far-field pattern at a recorded frequency; gain needs the accepted port power."""
    index = huygens.frequency_index(f_hz)
    if index is None:
        recorded = ", ".join(f"{f / 1e9:g}" for f in huygens.frequencies_hz)
        raise FrequencyLookupError(f"{f_hz / 1e9:g} GHz was not recorded (available: {recorded} GHz)")
    theta_deg = DEFAULT_THETA_DEG if theta_deg is None else np.asarray(theta_deg, dtype=float)
    phi_deg = DEFAULT_PHI_DEG if phi_deg is None else np.asarray(phi_deg, dtype=float)
    f_hz = float(huygens.frequencies_hz[index])
    k = 2.0 * np.pi * f_hz / C0

    th, ph = np.meshgrid(np.radians(theta_deg), np.radians(phi_deg), indexing="ij")
    st, ct, sp, cp = np.sin(th).ravel(), np.cos(th).ravel(), np.sin(ph).ravel(), np.cos(ph).ravel()
    r_hat = np.column_stack([st * cp, st * sp, ct])
    theta_hat = np.column_stack([ct * cp, ct * sp, -st])
    phi_hat = np.column_stack([-sp, cp, np.zeros_like(sp)])

    n_vec, l_vec = radiation_vectors(huygens.faces, index, k, r_hat)
    n_theta = np.sum(n_vec * theta_hat, axis=1)
    n_phi = np.sum(n_vec * phi_hat, axis=1)
    l_theta = np.sum(l_vec * theta_hat, axis=1)
    l_phi = np.sum(l_vec * phi_hat, axis=1)

    shape = th.shape
    e_theta = (-1j * k / (4.0 * np.pi) * (l_phi + ETA0 * n_theta)).reshape(shape)
    e_phi = (1j * k / (4.0 * np.pi) * (l_theta - ETA0 * n_phi)).reshape(shape)
    intensity = (np.abs(e_theta) ** 2 + np.abs(e_phi) ** 2) / (2.0 * ETA0)

    p_rad = radiated_power(huygens.faces, index)
    warnings = []
    directivity = 4.0 * np.pi * intensity / p_rad if p_rad > 0.0 else np.zeros(shape)
    efficiency = None
    gain = directivity.copy()
    if input_power_w is None:
        message = (f"no accepted input power at {f_hz / 1e9:g} GHz; "
                   "gain left equal to directivity, efficiency unknown")
        print(f"⚠️  {message}")
        warnings.append(message)
    else:
        efficiency = radiation_efficiency(p_rad, input_power_w)
        if p_rad > input_power_w:
            warnings.append(f"efficiency {p_rad / input_power_w:.4f} at {f_hz / 1e9:g} GHz clamped to 1")
        gain = efficiency * directivity

    return FarFieldPattern(
        frequency_hz=f_hz, theta_deg=theta_deg, phi_deg=phi_deg,
        e_theta=e_theta, e_phi=e_phi, directivity=directivity, gain=gain,
        radiated_power_w=p_rad, input_power_w=input_power_w, efficiency=efficiency,
        warnings=warnings,
    )
