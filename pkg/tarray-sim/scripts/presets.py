"""
Named scenes shipped with the toolkit.

Antenna presets are built from a DesignParameters record (the optimized
parameter table plus substrate and layout choices), so sweeps can override
any single field. Fixture presets (cavity, dipoles, port loads) are the
validation geometries used by the physics gates.
"""

from dataclasses import asdict, dataclass, fields, replace

from design_calc import FABRICATED_SUBSTRATE, SubstrateSpec
from errors import GeometryPreconditionError
from geometry import (
    ArrayParams,
    FeedParams,
    PortPlacement,
    Scene,
    TSlotParams,
    Wire,
    add_feed,
    add_ground,
    add_ground_with_rear_slot,
    apply_double_t_slots,
    build_patch_element,
    set_substrate,
    tile_array,
)


@dataclass(frozen=True)
class DesignParameters:
    patch_length_mm: float = 6.23          # L
    patch_width_mm: float = 7.41           # W
    feed_width_mm: float = 0.80            # f_g
    feed_length_mm: float = 2.77           # f_l
    arm_mm: float = 0.72                   # t_a
    slot_width_mm: float = 0.4             # t_g
    bar_length_mm: float = 2.4             # t_l
    bar_breadth_mm: float = 0.48           # t_b
    pair_separation_mm: float = 2.16       # d
    gap_mm: float = 2.2                    # g
    row_gap_mm: float = None
    top_inset_mm: float = 0.3
    rotation_deg: float = 90.0
    schedule: str = "alternate"
    rows: int = 3
    cols: int = 3
    relative_permittivity: float = FABRICATED_SUBSTRATE.relative_permittivity
    loss_tangent: float = FABRICATED_SUBSTRATE.loss_tangent
    height_mm: float = FABRICATED_SUBSTRATE.height_mm
    rear_slot_scale: float = 1.0
    substrate_length_mm: float = 30.9

    @property
    def substrate(self):
        return SubstrateSpec(self.relative_permittivity, self.loss_tangent, self.height_mm)

    @property
    def slot(self):
        return TSlotParams(self.arm_mm, self.slot_width_mm, self.bar_length_mm,
                           self.bar_breadth_mm, self.pair_separation_mm, self.top_inset_mm)

    @property
    def feed(self):
        return FeedParams(self.feed_width_mm, self.feed_length_mm)

    def array(self, rows=None, cols=None):
        return ArrayParams(rows or self.rows, cols or self.cols, self.gap_mm,
                           self.rotation_deg, self.row_gap_mm, self.schedule)


# Short symbols accepted by the CLI and the sweep runner
PARAMETER_ALIASES = {
    "L": "patch_length_mm",
    "W": "patch_width_mm",
    "f_g": "feed_width_mm",
    "f_l": "feed_length_mm",
    "t_a": "arm_mm",
    "t_g": "slot_width_mm",
    "t_l": "bar_length_mm",
    "t_b": "bar_breadth_mm",
    "d": "pair_separation_mm",
    "g": "gap_mm",
    "row_gap": "row_gap_mm",
    "rotation": "rotation_deg",
    "h": "height_mm",
    "er": "relative_permittivity",
    "tan_d": "loss_tangent",
    "rear_scale": "rear_slot_scale",
}


def resolve_parameter(name):
    name = PARAMETER_ALIASES.get(name, name)
    if name not in {f.name for f in fields(DesignParameters)}:
        known = ", ".join(sorted(PARAMETER_ALIASES))
        raise GeometryPreconditionError(f"unknown design parameter '{name}' (known: {known})")
    return name


def coerce_parameter(name, value):
    """Cast ``value`` to the type of the design field ``name`` (ints must be whole)."""
    name = resolve_parameter(name)
    kind = {f.name: f.type for f in fields(DesignParameters)}[name]
    try:
        if kind is int:
            number = float(value)
            if not number.is_integer():
                raise ValueError(f"{value} is not a whole number")
            return int(number)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise GeometryPreconditionError(f"bad value for {name}: {e}") from e


def design_parameters(**overrides):
    resolved = {resolve_parameter(k): coerce_parameter(k, v) for k, v in overrides.items() if v is not None}
    return replace(DesignParameters(), **resolved)


def _record(scene, p, slotted=True):
    smallest = min(p.slot_width_mm, p.feed_width_mm) if slotted else p.feed_width_mm
    scene.metadata["min_feature_mm"] = smallest
    scene.metadata["design_parameters"] = asdict(p)
    return scene


def _element_scene(p, slotted, name):
    element = build_patch_element(p.patch_length_mm, p.patch_width_mm)
    if slotted:
        element = apply_double_t_slots(element, p.slot)
    scene = tile_array(element, p.array(rows=1, cols=1), name=name)
    add_feed(scene, p.feed)
    set_substrate(scene, p.substrate)
    if slotted:
        add_ground_with_rear_slot(scene, p.slot, p.rear_slot_scale)
    else:
        add_ground(scene)
    return _record(scene, p, slotted)


def single_patch(p):
    return _element_scene(p, slotted=False, name="single-patch")


def double_t(p):
    return _element_scene(p, slotted=True, name="double-t")


def double_t_alt(p):
    # 2.4 mm bar with 1.84 mm total slot height
    return double_t(replace(p, arm_mm=1.84 - p.bar_breadth_mm))


def slotted_array(p, name="paper-3x3"):
    """
    Slotted array with the feed on the bottom-center element. The substrate
    is as wide as the metal and ``substrate_length_mm`` long from the feed end.
    """
    element = apply_double_t_slots(build_patch_element(p.patch_length_mm, p.patch_width_mm), p.slot)
    scene = tile_array(element, p.array(), name=name)
    add_feed(scene, p.feed)
    x0, _, x1, y1 = scene.metal_bounding_box()
    y0 = scene.port.position_mm[1]
    top = y0 + p.substrate_length_mm if p.substrate_length_mm else y1 + 3.0 * p.height_mm
    if top < y1:
        raise GeometryPreconditionError(
            f"substrate length {p.substrate_length_mm} mm is shorter than the metal "
            f"({y1 - y0:.3f} mm from the feed end)")
    set_substrate(scene, p.substrate, extents_mm=(x0, y0, x1, top))
    add_ground_with_rear_slot(scene, p.slot, p.rear_slot_scale)
    return _record(scene, p)


def slotted_array_thin(p):
    return slotted_array(replace(p, height_mm=0.1), name="paper-3x3-thin")


def slotted_array_short_feed(p):
    return slotted_array(replace(p, feed_length_mm=0.78), name="paper-3x3-short-feed")


# -- validation fixtures -----------------------------------------------------

def cavity_te101(p=None):
    """Closed 20 x 10 x 25 mm PEC box, weakly probed across y at its center."""
    scene = Scene(name="cavity-te101", boundary="pec", domain_mm=((0.0, 0.0, 0.0), (20.0, 10.0, 25.0)))
    scene.port = PortPlacement(position_mm=(10.0, 4.5, 12.5), axis="y", length_mm=1.0,
                               resistance_ohms=1e6)
    scene.metadata.update({"oracle": "cavity", "cavity_mm": [20.0, 10.0, 25.0], "huygens": False})
    return scene


def dipole_hertzian(p=None):
    scene = Scene(name="dipole-hertzian", boundary="open",
                  domain_mm=((-5.0, -5.0, -5.0), (5.0, 5.0, 5.0)))
    scene.port = PortPlacement(position_mm=(0.0, 0.0, -0.5), axis="z", length_mm=1.0)
    scene.metadata.update({"oracle": "dipole", "dipole_kind": "hertzian", "frequencies_hz": [10e9]})
    return scene


def dipole_halfwave(p=None):
    """15 mm wire dipole (half a wavelength at 10 GHz) fed across a 1 mm gap."""
    scene = Scene(name="dipole-halfwave", boundary="open",
                  domain_mm=((-12.0, -12.0, -15.0), (12.0, 12.0, 15.0)))
    scene.wires = [Wire((0.0, 0.0, -7.5), "z", 7.0), Wire((0.0, 0.0, 0.5), "z", 7.0)]
    scene.port = PortPlacement(position_mm=(0.0, 0.0, -0.5), axis="z", length_mm=1.0)
    scene.metadata.update({"oracle": "dipole", "dipole_kind": "halfwave", "frequencies_hz": [10e9]})
    return scene


def _port_box(name, load_ohms):
    scene = Scene(name=name, boundary="pec", domain_mm=((0.0, 0.0, 0.0), (2.0, 2.0, 2.0)))
    scene.port = PortPlacement(position_mm=(1.0, 1.0, 0.8), axis="z", length_mm=0.4,
                               load_ohms=load_ohms)
    scene.metadata.update({"oracle": "port", "huygens": False, "cell_mm": 0.2})
    return scene


def matched_load(p=None):
    return _port_box("matched-load", load_ohms=50.0)


def open_port(p=None):
    return _port_box("open-port", load_ohms=None)


PRESETS = {
    "single-patch": single_patch,
    "double-t": double_t,
    "double-t-alt": double_t_alt,
    "paper-3x3": slotted_array,
    "paper-3x3-thin": slotted_array_thin,
    "paper-3x3-short-feed": slotted_array_short_feed,
    "cavity-te101": cavity_te101,
    "dipole-hertzian": dipole_hertzian,
    "dipole-halfwave": dipole_halfwave,
    "matched-load": matched_load,
    "open-port": open_port,
}

FIXTURES = ("cavity-te101", "dipole-hertzian", "dipole-halfwave", "matched-load", "open-port")


def build_preset(name, **overrides):
    """Build a preset scene; ``overrides`` are DesignParameters fields or their short symbols."""
    if name not in PRESETS:
        raise GeometryPreconditionError(f"unknown preset '{name}' (choose from: {', '.join(PRESETS)})")
    builder = PRESETS[name]
    if name in FIXTURES:
        return builder()
    return builder(design_parameters(**overrides))
