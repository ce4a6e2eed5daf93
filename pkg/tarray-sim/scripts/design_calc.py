"""
Closed-form microstrip patch design equations.

The chain width -> effective permittivity -> fringing extension -> length ->
substrate footprint seeds the antenna geometry. Lengths cross the public API
in millimeters and are carried in meters inside each formula.

The patch length subtracts a single fringing extension by default. The
standard transmission-line model subtracts one per radiating edge; it is
available with ``both_edges=True``.
"""

import json
import math
from dataclasses import asdict, dataclass

from scipy.constants import c as C0

from errors import DesignDomainError, InfeasibleDesignError, SingularityError

MM = 1e-3

# Substrate height rule of thumb: h = 0.0606 * lambda0 / sqrt(er)
HEIGHT_FACTOR = 0.0606


@dataclass(frozen=True)
class SubstrateSpec:
    relative_permittivity: float
    loss_tangent: float
    height_mm: float

    def __post_init__(self):
        if not self.relative_permittivity >= 1.0:
            raise DesignDomainError(
                f"relative permittivity must be >= 1, got {self.relative_permittivity}")
        if not self.loss_tangent >= 0.0:
            raise DesignDomainError(f"loss tangent must be >= 0, got {self.loss_tangent}")
        if not self.height_mm > 0.0:
            raise DesignDomainError(f"substrate height must be > 0 mm, got {self.height_mm}")

    @property
    def height_m(self):
        return self.height_mm * MM


# Substrate of the fabricated array: er 2.2, tan d 0.00009, 0.766 mm
FABRICATED_SUBSTRATE = SubstrateSpec(relative_permittivity=2.2, loss_tangent=0.00009, height_mm=0.766)


@dataclass(frozen=True)
class PatchDesign:
    """Every intermediate of the design chain, lengths in mm."""

    resonant_frequency_hz: float
    patch_width_mm: float
    effective_permittivity: float
    length_extension_mm: float
    patch_length_mm: float
    substrate_length_mm: float
    substrate_width_mm: float
    wavelength_mm: float
    relative_permittivity: float
    height_mm: float
    both_edges: bool = False

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _check_frequency(f_r):
    if not f_r > 0.0:
        raise DesignDomainError(f"resonant frequency must be > 0 Hz, got {f_r}")


def _check_permittivity(er):
    if not er >= 1.0:
        raise DesignDomainError(f"relative permittivity must be >= 1, got {er}")


def free_space_wavelength_mm(f_r):
    _check_frequency(f_r)
    return C0 / f_r / MM


def compute_patch_width(f_r, er):
    """W = c / (2 f_r) * sqrt(2 / (er + 1)), returned in mm."""
    _check_frequency(f_r)
    _check_permittivity(er)
    width_m = C0 / (2.0 * f_r) * math.sqrt(2.0 / (er + 1.0))
    return width_m / MM


def compute_effective_permittivity(er, h_mm, w_mm):
    _check_permittivity(er)
    if not h_mm > 0.0:
        raise DesignDomainError(f"height must be > 0 mm, got {h_mm}")
    if not w_mm > 0.0:
        raise DesignDomainError(f"width must be > 0 mm, got {w_mm}")
    h, w = h_mm * MM, w_mm * MM
    return (er + 1.0) / 2.0 + (er - 1.0) / 2.0 / math.sqrt(1.0 + 12.0 * h / w)


def compute_length_extension(e_eff, h_mm, w_mm):
    """Fringing extension of one radiating edge, in mm."""
    if not e_eff > 0.258:
        raise SingularityError(
            f"effective permittivity must exceed 0.258, got {e_eff}")
    if not h_mm > 0.0 or not w_mm > 0.0:
        raise DesignDomainError(f"height and width must be > 0 mm, got h={h_mm}, W={w_mm}")
    h, w = h_mm * MM, w_mm * MM
    ratio = w / h
    extension_m = (0.412 * h * (e_eff + 0.3) / (e_eff - 0.258)
                   * (ratio + 0.264) / (ratio + 0.8))
    return extension_m / MM


def compute_patch_length(f_r, e_eff, dl_mm, both_edges=False):
    """L = lambda0 / (2 sqrt(e_eff)) - dl, or - 2 dl with ``both_edges``."""
    _check_frequency(f_r)
    if not e_eff >= 1.0:
        raise DesignDomainError(f"effective permittivity must be >= 1, got {e_eff}")
    if not dl_mm >= 0.0:
        raise DesignDomainError(f"length extension must be >= 0 mm, got {dl_mm}")
    half_guided_m = C0 / f_r / (2.0 * math.sqrt(e_eff))
    edges = 2.0 if both_edges else 1.0
    length_m = half_guided_m - edges * dl_mm * MM
    if length_m <= 0.0:
        raise InfeasibleDesignError(
            f"patch length {length_m / MM:.4f} mm is not positive: "
            f"half guided wavelength {half_guided_m / MM:.4f} mm vs extension {dl_mm:.4f} mm")
    return length_m / MM


def compute_substrate_dims(l_mm, w_mm, h_mm):
    if not (l_mm > 0.0 and w_mm > 0.0 and h_mm > 0.0):
        raise DesignDomainError(f"dimensions must be > 0 mm, got L={l_mm}, W={w_mm}, h={h_mm}")
    return l_mm + 6.0 * h_mm, w_mm + 6.0 * h_mm


def compute_substrate_height(f_r, er):
    _check_frequency(f_r)
    _check_permittivity(er)
    return HEIGHT_FACTOR * (C0 / f_r) / math.sqrt(er) / MM


def design_patch(f_r, substrate, h_override=None, both_edges=False):
    """
    Run the full design chain for one resonant frequency.

    The substrate height comes from ``h_override`` when given, else from the
    height rule. A design whose two edge extensions would swallow the half
    guided wavelength is rejected in both modes.
    """
    _check_frequency(f_r)
    er = substrate.relative_permittivity
    h_mm = h_override if h_override is not None else compute_substrate_height(f_r, er)
    if not h_mm > 0.0:
        raise DesignDomainError(f"height must be > 0 mm, got {h_mm}")

    width = compute_patch_width(f_r, er)
    e_eff = compute_effective_permittivity(er, h_mm, width)
    extension = compute_length_extension(e_eff, h_mm, width)
    length = compute_patch_length(f_r, e_eff, extension, both_edges=both_edges)

    half_guided_mm = C0 / f_r / (2.0 * math.sqrt(e_eff)) / MM
    if half_guided_mm <= 2.0 * extension:
        raise InfeasibleDesignError(
            f"fringing extensions (2 x {extension:.4f} mm) exceed the half guided "
            f"wavelength {half_guided_mm:.4f} mm at {f_r / 1e9:g} GHz with h = {h_mm:g} mm")

    sub_length, sub_width = compute_substrate_dims(length, width, h_mm)
    return PatchDesign(
        resonant_frequency_hz=f_r,
        patch_width_mm=width,
        effective_permittivity=e_eff,
        length_extension_mm=extension,
        patch_length_mm=length,
        substrate_length_mm=sub_length,
        substrate_width_mm=sub_width,
        wavelength_mm=free_space_wavelength_mm(f_r),
        relative_permittivity=er,
        height_mm=h_mm,
        both_edges=both_edges,
    )


if __name__ == "__main__":
    design = design_patch(6e9, FABRICATED_SUBSTRATE, h_override=FABRICATED_SUBSTRATE.height_mm)
    print("🧪 Design chain at 6 GHz on the fabricated substrate")
    print(design.to_json())
