"""
Constructive 2.5-D scene for the patch, double-T element and tiled array.

Coordinates are millimeters. Metal lives on two zero-thickness layers, the
ground plane at z = 0 and the top layer at z = h; the substrate fills the
slab between them. Patch length runs along y (feed direction) and width
along x.

A scene is built by one owner through the module functions below, each of
which mutates and returns the scene it was handed. Primitives are applied in
list order: an additive primitive sets its footprint, a subtractive one
clears it on the same layer.
"""

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path as FilePath

import numpy as np
from matplotlib.path import Path

from design_calc import SubstrateSpec
from errors import (
    GeometryBoundsError,
    GeometryError,
    GeometryOverlapError,
    GeometryPreconditionError,
)

LAYERS = ("top", "ground", "substrate")
OPERATIONS = ("add", "subtract")
AXES = ("x", "y", "z")
BOUNDARIES = ("open", "pec")

# Exact quarter-turn rotations keep tiled extents free of round-off
_QUARTER_TURNS = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}


@dataclass(frozen=True)
class Material:
    kind: str = "pec"
    relative_permittivity: float = 1.0
    loss_tangent: float = 0.0

    @classmethod
    def dielectric(cls, relative_permittivity, loss_tangent=0.0):
        return cls("dielectric", relative_permittivity, loss_tangent)


PEC = Material("pec")
VACUUM = Material("vacuum")


def normalize_angle(angle_deg):
    angle = math.fmod(float(angle_deg), 360.0)
    if angle < 0.0:
        angle += 360.0
    return 0.0 if angle == 360.0 else angle


def _signed_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(vertices):
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def rectangle(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def rotate_points(vertices, angle_deg, center=(0.0, 0.0)):
    angle = normalize_angle(angle_deg)
    if angle in _QUARTER_TURNS:
        cos_a, sin_a = _QUARTER_TURNS[angle]
    else:
        cos_a, sin_a = math.cos(math.radians(angle)), math.sin(math.radians(angle))
    cx, cy = center
    out = []
    for x, y in vertices:
        dx, dy = x - cx, y - cy
        out.append((cx + cos_a * dx - sin_a * dy, cy + sin_a * dx + cos_a * dy))
    return tuple(out)


@dataclass(frozen=True)
class Primitive:
    """Simple polygon on one layer; vertices are stored counter-clockwise."""

    vertices: tuple
    layer: str = "top"
    operation: str = "add"
    material: Material = PEC

    def __post_init__(self):
        if self.layer not in LAYERS:
            raise GeometryPreconditionError(f"unknown layer '{self.layer}'")
        if self.operation not in OPERATIONS:
            raise GeometryPreconditionError(f"unknown operation '{self.operation}'")
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise GeometryPreconditionError("a polygon needs at least three vertices")
        signed = _signed_area(verts)
        if abs(signed) <= 1e-12:
            raise GeometryPreconditionError("degenerate polygon with zero area")
        if not _is_simple(verts):
            raise GeometryPreconditionError("polygon edges cross each other")
        if signed < 0:
            verts = tuple(reversed(verts))
        object.__setattr__(self, "vertices", verts)

    @property
    def area(self):
        return abs(_signed_area(self.vertices))

    @property
    def bounds(self):
        v = np.asarray(self.vertices)
        return (float(v[:, 0].min()), float(v[:, 1].min()),
                float(v[:, 0].max()), float(v[:, 1].max()))

    @property
    def centroid(self):
        v = np.asarray(self.vertices)
        return float(v[:, 0].mean()), float(v[:, 1].mean())

    def path(self):
        v = np.asarray(self.vertices + self.vertices[:1], dtype=float)
        return Path(v, closed=True)

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return self.path().contains_points(pts)

    def translated(self, dx, dy):
        return replace(self, vertices=tuple((x + dx, y + dy) for x, y in self.vertices))

    def rotated(self, angle_deg, center=(0.0, 0.0)):
        return replace(self, vertices=rotate_points(self.vertices, angle_deg, center))

    def to_dict(self):
        return {
            "layer": self.layer,
            "operation": self.operation,
            "material": asdict(self.material),
            "vertices": [list(v) for v in self.vertices],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            vertices=tuple(tuple(v) for v in data["vertices"]),
            layer=data["layer"],
            operation=data["operation"],
            material=Material(**data["material"]),
        )


def _shrunk_path(vertices, tol=1e-7):
    v = np.asarray(vertices, dtype=float)
    center = v.mean(axis=0)
    v = v + (center - v) * tol
    return Path(np.vstack([v, v[:1]]), closed=True)


def polygons_overlap(a, b):
    """True when the interiors of two polygons intersect (touching edges do not count)."""
    return bool(_shrunk_path(a).intersects_path(_shrunk_path(b), filled=True))


def polygon_within(inner, outer):
    outer_path = _shrunk_path(outer, tol=-1e-9)
    return bool(np.all(outer_path.contains_points(np.asarray(inner, dtype=float))))


@dataclass(frozen=True)
class Wire:
    """Axis-aligned PEC wire; rasterized as a run of conductor edges."""

    start_mm: tuple
    axis: str
    length_mm: float

    def __post_init__(self):
        if self.axis not in AXES:
            raise GeometryPreconditionError(f"wire axis must be x, y or z, got '{self.axis}'")
        if not self.length_mm > 0.0:
            raise GeometryPreconditionError("wire length must be > 0 mm")
        object.__setattr__(self, "start_mm", tuple(float(v) for v in self.start_mm))

    @property
    def end_mm(self):
        end = list(self.start_mm)
        end[AXES.index(self.axis)] += self.length_mm
        return tuple(end)


@dataclass(frozen=True)
class PortPlacement:
    """Lumped port gap; ``length_mm`` None spans ground to top layer."""

    position_mm: tuple
    axis: str = "z"
    length_mm: float = None
    resistance_ohms: float = 50.0
    load_ohms: float = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise GeometryPreconditionError(f"port axis must be x, y or z, got '{self.axis}'")
        if not self.resistance_ohms > 0.0:
            raise GeometryPreconditionError("port internal resistance must be > 0 ohm")
        if self.length_mm is not None and not self.length_mm > 0.0:
            raise GeometryPreconditionError("port length must be > 0 mm")
        if self.load_ohms is not None and not self.load_ohms > 0.0:
            raise GeometryPreconditionError("port load resistance must be > 0 ohm")
        object.__setattr__(self, "position_mm", tuple(float(v) for v in self.position_mm))


@dataclass(frozen=True)
class SubstrateBlock:
    spec: SubstrateSpec
    extents_mm: tuple

    def __post_init__(self):
        x0, y0, x1, y1 = (float(v) for v in self.extents_mm)
        if not (x1 > x0 and y1 > y0):
            raise GeometryPreconditionError(f"substrate extents are empty: {self.extents_mm}")
        object.__setattr__(self, "extents_mm", (x0, y0, x1, y1))

    @property
    def outline(self):
        return rectangle(*self.extents_mm)


@dataclass(frozen=True)
class TSlotParams:
    arm_mm: float = 0.72
    slot_width_mm: float = 0.4
    bar_length_mm: float = 2.4
    bar_breadth_mm: float = 0.48
    pair_separation_mm: float = 2.16
    top_inset_mm: float = 0.3

    def __post_init__(self):
        sizes = (self.arm_mm, self.slot_width_mm, self.bar_length_mm,
                 self.bar_breadth_mm, self.pair_separation_mm)
        if min(sizes) <= 0.0:
            raise GeometryPreconditionError(f"T-slot dimensions must all be > 0 mm, got {sizes}")
        if self.slot_width_mm > self.bar_length_mm:
            raise GeometryPreconditionError("T stem width cannot exceed the bar length")
        if self.top_inset_mm < 0.0:
            raise GeometryPreconditionError("T inset from the patch edge must be >= 0 mm")

    @property
    def area_mm2(self):
        return self.bar_length_mm * self.bar_breadth_mm + self.slot_width_mm * self.arm_mm

    def outline(self, stem_x, bar_top_y, scale=1.0):
        """T polygon: bar on top, stem hanging from the bar's center."""
        half_bar = 0.5 * self.bar_length_mm * scale
        half_stem = 0.5 * self.slot_width_mm * scale
        bar_bottom = bar_top_y - self.bar_breadth_mm * scale
        stem_bottom = bar_bottom - self.arm_mm * scale
        return (
            (stem_x - half_stem, stem_bottom),
            (stem_x + half_stem, stem_bottom),
            (stem_x + half_stem, bar_bottom),
            (stem_x + half_bar, bar_bottom),
            (stem_x + half_bar, bar_top_y),
            (stem_x - half_bar, bar_top_y),
            (stem_x - half_bar, bar_bottom),
            (stem_x - half_stem, bar_bottom),
        )

    def height(self, scale=1.0):
        return (self.bar_breadth_mm + self.arm_mm) * scale


@dataclass(frozen=True)
class ArrayParams:
    rows: int = 3
    cols: int = 3
    gap_mm: float = 2.2
    element_rotation_deg: float = 90.0
    row_gap_mm: float = None
    schedule: str = "alternate"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GeometryPreconditionError(f"array needs rows, cols >= 1, got {self.rows}x{self.cols}")
        if self.gap_mm < 0.0 or (self.row_gap_mm is not None and self.row_gap_mm < 0.0):
            raise GeometryPreconditionError("array gap must be >= 0 mm")
        if self.schedule not in ("alternate", "uniform"):
            raise GeometryPreconditionError(f"unknown rotation schedule '{self.schedule}'")
        object.__setattr__(self, "element_rotation_deg", normalize_angle(self.element_rotation_deg))

    @property
    def column_gap(self):
        return self.gap_mm

    @property
    def row_gap(self):
        return self.gap_mm if self.row_gap_mm is None else self.row_gap_mm

    def rotation_for(self, row, col):
        if self.schedule == "uniform":
            return self.element_rotation_deg
        return normalize_angle((row + col) * self.element_rotation_deg)


@dataclass(frozen=True)
class FeedParams:
    line_width_mm: float = 0.8
    line_length_mm: float = 2.77
    coplanar_gap_mm: float = 0.2
    ground_pad_width_mm: float = 2.0

    def __post_init__(self):
        if min(self.line_width_mm, self.line_length_mm, self.coplanar_gap_mm) <= 0.0:
            raise GeometryPreconditionError("feed width, length and coplanar gap must be > 0 mm")
        if self.ground_pad_width_mm < 0.0:
            raise GeometryPreconditionError("coplanar ground pad width must be >= 0 mm")

    @property
    def strip_area_mm2(self):
        return self.line_width_mm * self.line_length_mm


@dataclass
class ElementFragment:
    """Primitives of one element, centered at the origin, with its patch box."""

    length_mm: float
    width_mm: float
    primitives: list = field(default_factory=list)

    @property
    def outline(self):
        hl, hw = 0.5 * self.length_mm, 0.5 * self.width_mm
        return rectangle(-hw, -hl, hw, hl)

    def conductor_area(self):
        return sum(p.area if p.operation == "add" else -p.area
                   for p in self.primitives if p.layer == "top")


@dataclass
class Scene:
    name: str = "scene"
    primitives: list = field(default_factory=list)
    wires: list = field(default_factory=list)
    substrate: SubstrateBlock = None
    port: PortPlacement = None
    boundary: str = "open"
    domain_mm: tuple = None
    elements: list = field(default_factory=list)
    array_center_mm: tuple = (0.0, 0.0)
    metadata: dict = field(default_factory=dict)

    # -- geometry queries -------------------------------------------------

    @property
    def thickness_mm(self):
        return self.substrate.spec.height_mm if self.substrate else 0.0

    def layer_z_mm(self, layer):
        return self.thickness_mm if layer == "top" else 0.0

    def port_length_mm(self):
        if self.port is None:
            return None
        if self.port.length_mm is not None:
            return self.port.length_mm
        if self.substrate is None:
            raise GeometryError("port spans ground to top layer but the scene has no substrate")
        return self.thickness_mm

    def metal_bounding_box(self):
        xs, ys = [], []
        for prim in self.primitives:
            if prim.operation == "add" and prim.layer != "substrate":
                x0, y0, x1, y1 = prim.bounds
                xs += [x0, x1]
                ys += [y0, y1]
        if not xs:
            return None
        return (min(xs), min(ys), max(xs), max(ys))

    def bounding_box(self):
        """((x0, y0, z0), (x1, y1, z1)) enclosing every primitive, wire and port."""
        if self.domain_mm is not None:
            lo, hi = self.domain_mm
            return tuple(lo), tuple(hi)
        xs, ys, zs = [], [], [0.0, self.thickness_mm]
        for prim in self.primitives:
            x0, y0, x1, y1 = prim.bounds
            xs += [x0, x1]
            ys += [y0, y1]
        if self.substrate is not None:
            x0, y0, x1, y1 = self.substrate.extents_mm
            xs += [x0, x1]
            ys += [y0, y1]
        for wire in self.wires:
            for point in (wire.start_mm, wire.end_mm):
                xs.append(point[0])
                ys.append(point[1])
                zs.append(point[2])
        if self.port is not None:
            xs.append(self.port.position_mm[0])
            ys.append(self.port.position_mm[1])
            zs.append(self.port.position_mm[2])
        if not xs:
            return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        return (min(xs), min(ys), min(zs)), (max(xs), max(ys), max(zs))

    def overall_dimensions_mm(self):
        lo, hi = self.bounding_box()
        return {"length_mm": hi[1] - lo[1], "width_mm": hi[0] - lo[0],
                "thickness_mm": hi[2] - lo[2]}

    def conductor_area(self, layer="top"):
        """
        Analytic metal area of a layer. Exact when additive primitives are
        pairwise disjoint and every cut lies inside metal, which the builders
        enforce for quarter-turn rotations.
        """
        total = 0.0
        for prim in self.primitives:
            if prim.layer != layer:
                continue
            total += prim.area if prim.operation == "add" else -prim.area
        return total

    def contains_point(self, layer, x, y):
        return bool(self.layer_mask(layer, np.array([[x, y]]))[0])

    def layer_mask(self, layer, points):
        """Point membership after applying every primitive of ``layer`` in order."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        mask = np.zeros(len(pts), dtype=bool)
        for prim in self.primitives:
            if prim.layer != layer:
                continue
            x0, y0, x1, y1 = prim.bounds
            near = ((pts[:, 0] >= x0) & (pts[:, 0] <= x1)
                    & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))
            if not near.any():
                continue
            inside = np.zeros(len(pts), dtype=bool)
            inside[near] = prim.contains(pts[near])
            if prim.operation == "add":
                mask |= inside
            else:
                mask &= ~inside
        return mask

    def rotated(self, angle_deg, center=(0.0, 0.0)):
        """Copy with primitives and port rotated in the layer plane; the substrate slab is left as is."""
        out = copy.deepcopy(self)
        out.primitives = [p.rotated(angle_deg, center) for p in self.primitives]
        if self.port is not None:
            (px, py), = rotate_points([self.port.position_mm[:2]], angle_deg, center)
            out.port = replace(self.port, position_mm=(px, py, self.port.position_mm[2]))
        return out

    # -- checks and serialization -----------------------------------------

    def validate(self):
        if self.port is None:
            raise GeometryError(f"scene '{self.name}' has no port; exactly one is required")
        if self.boundary not in BOUNDARIES:
            raise GeometryPreconditionError(f"unknown boundary '{self.boundary}'")
        if self.domain_mm is not None:
            lo, hi = self.domain_mm
            for prim in self.primitives:
                x0, y0, x1, y1 = prim.bounds
                if x0 < lo[0] - 1e-9 or y0 < lo[1] - 1e-9 or x1 > hi[0] + 1e-9 or y1 > hi[1] + 1e-9:
                    raise GeometryBoundsError("primitive extends outside the scene domain")
        self.port_length_mm()
        return self

    def to_dict(self):
        lo, hi = self.bounding_box()
        return {
            "units": "mm",
            "name": self.name,
            "boundary": self.boundary,
            "domain_mm": None if self.domain_mm is None else [list(self.domain_mm[0]), list(self.domain_mm[1])],
            "substrate": None if self.substrate is None else {
                **asdict(self.substrate.spec),
                "extents_mm": list(self.substrate.extents_mm),
            },
            "primitives": [p.to_dict() for p in self.primitives],
            "wires": [{"start_mm": list(w.start_mm), "axis": w.axis, "length_mm": w.length_mm}
                      for w in self.wires],
            "port": None if self.port is None else {
                "position_mm": list(self.port.position_mm),
                "axis": self.port.axis,
                "length_mm": self.port.length_mm,
                "resistance_ohms": self.port.resistance_ohms,
                "load_ohms": self.port.load_ohms,
            },
            "elements": self.elements,
            "array_center_mm": list(self.array_center_mm),
            "bounding_box_mm": [list(lo), list(hi)],
            "overall_dimensions_mm": self.overall_dimensions_mm(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("units") != "mm":
            raise GeometryPreconditionError(f"scene units must be 'mm', got {data.get('units')!r}")
        sub = data.get("substrate")
        substrate = None
        if sub is not None:
            spec = SubstrateSpec(sub["relative_permittivity"], sub["loss_tangent"], sub["height_mm"])
            substrate = SubstrateBlock(spec, tuple(sub["extents_mm"]))
        port = data.get("port")
        domain = data.get("domain_mm")
        return cls(
            name=data.get("name", "scene"),
            primitives=[Primitive.from_dict(p) for p in data.get("primitives", [])],
            wires=[Wire(tuple(w["start_mm"]), w["axis"], w["length_mm"]) for w in data.get("wires", [])],
            substrate=substrate,
            port=None if port is None else PortPlacement(
                tuple(port["position_mm"]), port["axis"], port.get("length_mm"),
                port.get("resistance_ohms", 50.0), port.get("load_ohms")),
            boundary=data.get("boundary", "open"),
            domain_mm=None if domain is None else (tuple(domain[0]), tuple(domain[1])),
            elements=data.get("elements", []),
            array_center_mm=tuple(data.get("array_center_mm", (0.0, 0.0))),
            metadata=data.get("metadata", {}),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path):
        path = FilePath(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def fingerprint(self):
        data = self.to_dict()
        data.pop("metadata", None)
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


# -- builders ---------------------------------------------------------------

def build_patch_element(length_mm, width_mm):
    if not (length_mm > 0.0 and width_mm > 0.0):
        raise GeometryPreconditionError(
            f"patch dimensions must be > 0 mm, got {length_mm} x {width_mm}")
    element = ElementFragment(length_mm=length_mm, width_mm=width_mm)
    element.primitives.append(Primitive(element.outline, layer="top", operation="add", material=PEC))
    return element


def double_t_outlines(element, t):
    """
    Outlines of the slot pair. Each stem center sits ``pair_separation_mm``
    from the patch's vertical axis, one on each side.
    """
    bar_top = 0.5 * element.length_mm - t.top_inset_mm
    offset = t.pair_separation_mm
    return [t.outline(-offset, bar_top), t.outline(offset, bar_top)]


def apply_double_t_slots(element, t):
    outlines = double_t_outlines(element, t)
    for outline in outlines:
        if not polygon_within(outline, element.outline):
            raise GeometryBoundsError(
                f"T-slot with separation {t.pair_separation_mm} mm extends outside the "
                f"{element.length_mm} x {element.width_mm} mm patch")
    if polygons_overlap(outlines[0], outlines[1]):
        raise GeometryOverlapError(
            f"T-slots overlap: separation {t.pair_separation_mm} mm is below half the "
            f"bar length {t.bar_length_mm} mm")
    slotted = ElementFragment(element.length_mm, element.width_mm, list(element.primitives))
    for outline in outlines:
        slotted.primitives.append(Primitive(outline, layer="top", operation="subtract", material=VACUUM))
    return slotted


def tile_array(element, a, name="array"):
    pitch_x = element.width_mm + a.column_gap
    pitch_y = element.length_mm + a.row_gap
    scene = Scene(name=name)
    outlines = []
    for row in range(a.rows):
        for col in range(a.cols):
            cx = (col - 0.5 * (a.cols - 1)) * pitch_x
            cy = (row - 0.5 * (a.rows - 1)) * pitch_y
            angle = a.rotation_for(row, col)
            for prim in element.primitives:
                scene.primitives.append(prim.rotated(angle).translated(cx, cy))
            outline = tuple((x + cx, y + cy) for x, y in rotate_points(element.outline, angle))
            outlines.append(outline)
            scene.elements.append({
                "row": row, "col": col, "center_mm": [cx, cy],
                "rotation_deg": angle, "outline_mm": [list(v) for v in outline],
            })
    for i in range(len(outlines)):
        for j in range(i + 1, len(outlines)):
            if polygons_overlap(outlines[i], outlines[j]):
                raise GeometryOverlapError(
                    f"array elements {i} and {j} overlap; increase the gap or change the rotation")
    scene.array_center_mm = (0.0, 0.0)
    scene.metadata["array"] = asdict(a)
    return scene


def _lower_boundary_y(outline, x):
    """Lowest y where the vertical line at ``x`` crosses the outline."""
    hits = []
    n = len(outline)
    for i in range(n):
        (x0, y0), (x1, y1) = outline[i], outline[(i + 1) % n]
        if min(x0, x1) - 1e-12 <= x <= max(x0, x1) + 1e-12:
            if abs(x1 - x0) < 1e-12:
                hits += [y0, y1]
            else:
                hits.append(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    if not hits:
        raise GeometryBoundsError("feed line does not meet the attachment element")
    return min(hits)


def _lowest_under(outline, x0, x1):
    """Lowest outline y over [x0, x1], or None when the outline does not reach that span."""
    xs = [x for x, _ in outline]
    lo, hi = max(x0, min(xs)), min(x1, max(xs))
    if lo > hi:
        return None
    samples = [lo, hi] + [x for x in xs if lo < x < hi]
    return min(_lower_boundary_y(outline, x) for x in samples)


def add_feed(scene, f):
    """Strip from the bottom-center element downwards, with coplanar ground pads."""
    if not scene.elements:
        raise GeometryError("add_feed needs a tiled array to attach to")
    bottom_row = min(e["row"] for e in scene.elements)
    row_elements = sorted((e for e in scene.elements if e["row"] == bottom_row), key=lambda e: e["col"])
    attach = row_elements[len(row_elements) // 2]
    outline = [tuple(v) for v in attach["outline_mm"]]
    xc = attach["center_mm"][0]
    half = 0.5 * f.line_width_mm

    top = max(_lower_boundary_y(outline, x) for x in (xc - half, xc, xc + half))
    bottom = top - f.line_length_mm
    strip = rectangle(xc - half, bottom, xc + half, top)

    others = [[tuple(v) for v in e["outline_mm"]] for e in scene.elements if e is not attach]
    for other in others:
        if polygons_overlap(strip, other):
            raise GeometryOverlapError("feed strip overlaps an element other than its attachment")
    scene.primitives.append(Primitive(strip, layer="top", operation="add", material=PEC))

    if f.ground_pad_width_mm > 0.0:
        inner = half + f.coplanar_gap_mm
        pads = []
        for x0, x1 in ((xc - inner - f.ground_pad_width_mm, xc - inner),
                       (xc + inner, xc + inner + f.ground_pad_width_mm)):
            lowest = _lowest_under(outline, x0, x1)
            pad_top = (top if lowest is None else min(top, lowest)) - f.coplanar_gap_mm
            if pad_top <= bottom:
                raise GeometryOverlapError("no room for a coplanar ground pad under the attachment element")
            pads.append(rectangle(x0, bottom, x1, pad_top))
        for pad in pads:
            for other in others + [outline]:
                if polygons_overlap(pad, other):
                    raise GeometryOverlapError("coplanar ground pad overlaps an array element")
            scene.primitives.append(Primitive(pad, layer="top", operation="add", material=PEC))

    scene.port = PortPlacement(position_mm=(xc, bottom, 0.0), axis="z", length_mm=None)
    scene.metadata["feed"] = asdict(f)
    return scene


def set_substrate(scene, spec, extents_mm=None, margin_mm=None):
    """
    Attach the dielectric slab. Without explicit extents the slab covers the
    metal with a margin (default 3h per side) except along the feed end,
    where the port sits on the substrate edge.
    """
    if extents_mm is None:
        box = scene.metal_bounding_box()
        if box is None:
            raise GeometryError("cannot size a substrate for a scene without metal")
        margin = 3.0 * spec.height_mm if margin_mm is None else margin_mm
        y_low = box[1] if scene.port is not None else box[1] - margin
        extents_mm = (box[0] - margin, y_low, box[2] + margin, box[3] + margin)
    scene.substrate = SubstrateBlock(spec, tuple(extents_mm))
    return scene


def add_ground(scene):
    if scene.substrate is None:
        raise GeometryError("ground plane needs the substrate extents; set the substrate first")
    scene.primitives.append(
        Primitive(scene.substrate.outline, layer="ground", operation="add", material=PEC))
    return scene


def add_ground_with_rear_slot(scene, slot, scale=1.0):
    if not scale > 0.0:
        raise GeometryPreconditionError(f"rear slot scale must be > 0, got {scale}")
    add_ground(scene)
    cx, cy = scene.array_center_mm
    bar_top = cy + 0.5 * slot.height(scale)
    outline = slot.outline(cx, bar_top, scale=scale)
    if not polygon_within(outline, scene.substrate.outline):
        raise GeometryBoundsError(
            f"rear T-slot scaled by {scale} exceeds the ground plane "
            f"({scale * slot.bar_length_mm:.2f} mm bar)")
    scene.primitives.append(Primitive(outline, layer="ground", operation="subtract", material=VACUUM))
    scene.metadata["rear_slot_scale"] = scale
    return scene
