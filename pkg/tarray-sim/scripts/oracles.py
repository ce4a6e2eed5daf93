"""
Analytic reference models used to sanity-check the solver and design chain.

Nothing here imports the solver; the CLI prints these next to simulated
numbers as "predicted vs simulated" tables.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0
from scipy.integrate import quad

from errors import OracleDomainError

MM = 1e-3


@dataclass(frozen=True)
class CavitySpec:
    a_mm: float
    b_mm: float
    d_mm: float
    m: int = 1
    n: int = 0
    p: int = 1

    def __post_init__(self):
        if min(self.a_mm, self.b_mm, self.d_mm) <= 0.0:
            raise OracleDomainError("cavity dimensions must be > 0 mm")
        indices = (self.m, self.n, self.p)
        if min(indices) < 0:
            raise OracleDomainError(f"mode indices must be >= 0, got {indices}")
        if sum(1 for i in indices if i == 0) > 1:
            raise OracleDomainError(f"at most one mode index may be zero, got {indices}")

    @property
    def label(self):
        return f"TE{self.m}{self.n}{self.p}"


@dataclass(frozen=True)
class PatchResonance:
    single_extension_hz: float
    two_extension_hz: float

    def as_dict(self):
        return {"single_extension_hz": self.single_extension_hz, "two_extension_hz": self.two_extension_hz}


def cavity_resonance(spec):
    """f = (c/2) sqrt((m/a)^2 + (n/b)^2 + (p/d)^2)"""
    a, b, d = spec.a_mm * MM, spec.b_mm * MM, spec.d_mm * MM
    return C0 / 2.0 * math.sqrt((spec.m / a) ** 2 + (spec.n / b) ** 2 + (spec.p / d) ** 2)


def tline_patch_resonance(l_mm, dl_mm, e_eff):
    """Invert the patch length formula, single-extension and two-extension forms."""
    if not (l_mm > 0.0 and e_eff > 0.0 and dl_mm >= 0.0):
        raise OracleDomainError(f"need L > 0, dl >= 0, e_eff > 0; got {l_mm}, {dl_mm}, {e_eff}")
    root = math.sqrt(e_eff)
    single = C0 / (2.0 * (l_mm + dl_mm) * MM * root)
    double = C0 / (2.0 * (l_mm + 2.0 * dl_mm) * MM * root)
    return PatchResonance(single_extension_hz=single, two_extension_hz=double)


def _halfwave_integrand(theta):
    s = math.sin(theta)
    if s < 1e-12:
        return 0.0
    return math.cos(0.5 * math.pi * math.cos(theta)) ** 2 / s


def dipole_directivity(kind):
    """Peak directivity (linear) of an ideal short or half-wave dipole."""
    if kind == "hertzian":
        return 1.5
    if kind == "halfwave":
        integral, _ = quad(_halfwave_integrand, 0.0, math.pi, limit=200)
        return 2.0 / integral
    raise OracleDomainError(f"unknown dipole kind '{kind}' (use hertzian or halfwave)")


def dipole_pattern(kind, theta_rad):
    """Normalized power pattern of a z-directed dipole, 1 at broadside."""
    theta = np.asarray(theta_rad, dtype=float)
    s = np.sin(theta)
    if kind == "hertzian":
        return s ** 2
    if kind == "halfwave":
        with np.errstate(divide="ignore", invalid="ignore"):
            pattern = (np.cos(0.5 * np.pi * np.cos(theta)) / s) ** 2
        return np.where(np.abs(s) < 1e-12, 0.0, pattern)
    raise OracleDomainError(f"unknown dipole kind '{kind}' (use hertzian or halfwave)")


def to_dbi(value):
    return 10.0 * math.log10(value)
