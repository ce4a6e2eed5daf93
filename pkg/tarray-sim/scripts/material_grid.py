"""
Staircase rasterization of a Scene onto a Yee grid.

Cells carry relative permittivity and conductivity sampled at their centers.
Metal sheets become PEC flags on the tangential edges of their grid plane:
every edge that borders a metal cell of that layer is flagged. Wires flag
the run of edges along their axis.

Grid file layout (little-endian): b"PFGRID01", nx ny nz (uint32),
dx dy dz in meters (float64), eps_r then sigma (float64, x fastest), then
the Ex, Ey, Ez PEC masks as bit-packed arrays (x fastest, LSB first).
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import epsilon_0

from errors import GeometryError
from resource_guard import check_cell_budget

MM = 1e-3
MAGIC = b"PFGRID01"
DEFAULT_REFERENCE_FREQUENCY_HZ = 10e9


@dataclass
class MaterialGrid:
    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    eps_r: np.ndarray
    sigma: np.ndarray
    pec_x: np.ndarray
    pec_y: np.ndarray
    pec_z: np.ndarray
    origin_m: tuple = (0.0, 0.0, 0.0)
    k_ground: int = None
    k_top: int = None
    footprints: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @classmethod
    def vacuum(cls, nx, ny, nz, dx, dy=None, dz=None, origin_m=(0.0, 0.0, 0.0)):
        dy = dx if dy is None else dy
        dz = dx if dz is None else dz
        return cls(
            nx=nx, ny=ny, nz=nz, dx=dx, dy=dy, dz=dz,
            eps_r=np.ones((nx, ny, nz)),
            sigma=np.zeros((nx, ny, nz)),
            pec_x=np.zeros((nx, ny + 1, nz + 1), dtype=bool),
            pec_y=np.zeros((nx + 1, ny, nz + 1), dtype=bool),
            pec_z=np.zeros((nx + 1, ny + 1, nz), dtype=bool),
            origin_m=tuple(origin_m),
        )

    @property
    def n_cells(self):
        return self.nx * self.ny * self.nz

    @property
    def shape(self):
        return self.nx, self.ny, self.nz

    @property
    def spacing(self):
        return self.dx, self.dy, self.dz

    def node_index(self, point_m):
        """Nearest grid node (i, j, k) to a point in meters."""
        idx = []
        for value, origin, step, n in zip(point_m, self.origin_m, self.spacing, self.shape):
            i = int(round((value - origin) / step))
            if i < 0 or i > n:
                raise GeometryError(f"point {point_m} lies outside the grid")
            idx.append(i)
        return tuple(idx)

    def conductor_area(self, layer="top"):
        """Voxelized metal area of a layer in mm^2."""
        footprint = self.footprints.get(layer)
        if footprint is None:
            return 0.0
        return float(footprint.sum()) * self.dx * self.dy / MM**2

    def pec_edge_count(self):
        return int(self.pec_x.sum() + self.pec_y.sum() + self.pec_z.sum())

    # -- file formats ---------------------------------------------------------

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(np.array([self.nx, self.ny, self.nz], dtype="<u4").tobytes())
            f.write(np.array([self.dx, self.dy, self.dz], dtype="<f8").tobytes())
            f.write(self.eps_r.astype("<f8").ravel(order="F").tobytes())
            f.write(self.sigma.astype("<f8").ravel(order="F").tobytes())
            for mask in (self.pec_x, self.pec_y, self.pec_z):
                f.write(np.packbits(mask.ravel(order="F"), bitorder="little").tobytes())
        return path

    @classmethod
    def read(cls, path):
        data = Path(path).read_bytes()
        if data[:8] != MAGIC:
            raise GeometryError(f"{path} is not a material grid file")
        offset = 8
        nx, ny, nz = (int(v) for v in np.frombuffer(data, dtype="<u4", count=3, offset=offset))
        offset += 12
        dx, dy, dz = (float(v) for v in np.frombuffer(data, dtype="<f8", count=3, offset=offset))
        offset += 24
        n = nx * ny * nz
        eps = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape((nx, ny, nz), order="F")
        offset += 8 * n
        sigma = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape((nx, ny, nz), order="F")
        offset += 8 * n
        masks = []
        for shape in ((nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)):
            count = int(np.prod(shape))
            nbytes = (count + 7) // 8
            bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=offset),
                                 count=count, bitorder="little")
            masks.append(bits.astype(bool).reshape(shape, order="F"))
            offset += nbytes
        return cls(nx=nx, ny=ny, nz=nz, dx=dx, dy=dy, dz=dz,
                   eps_r=eps.copy(), sigma=sigma.copy(),
                   pec_x=masks[0], pec_y=masks[1], pec_z=masks[2])

    def write_stl(self, path, name="metal"):
        """ASCII STL of the metal footprints, one quad (two facets) per metal cell."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        planes = {"ground": self.k_ground, "top": self.k_top}
        ox, oy, oz = (v / MM for v in self.origin_m)
        dx, dy, dz = self.dx / MM, self.dy / MM, self.dz / MM
        lines = [f"solid {name}"]
        for layer, footprint in sorted(self.footprints.items()):
            k = planes.get(layer)
            if k is None:
                continue
            z = oz + k * dz
            for i, j in zip(*np.nonzero(footprint)):
                x0, y0 = ox + i * dx, oy + j * dy
                x1, y1 = x0 + dx, y0 + dy
                for tri in (((x0, y0), (x1, y0), (x1, y1)), ((x0, y0), (x1, y1), (x0, y1))):
                    lines.append("  facet normal 0 0 1")
                    lines.append("    outer loop")
                    for x, y in tri:
                        lines.append(f"      vertex {x:.6f} {y:.6f} {z:.6f}")
                    lines.append("    endloop")
                    lines.append("  endfacet")
        lines.append(f"endsolid {name}")
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        return path


def _axis_layout(lo_mm, hi_mm, cell_mm, margin_mm):
    margin_cells = int(math.ceil(margin_mm / cell_mm - 1e-9)) if margin_mm > 0 else 0
    span = max(hi_mm - lo_mm, 0.0)
    n = int(math.ceil(span / cell_mm - 1e-9)) + 2 * margin_cells
    return lo_mm - margin_cells * cell_mm, max(n, 1)


def _edge_masks(footprint):
    """Ex and Ey edge masks (one plane) bordering any metal cell."""
    nx, ny = footprint.shape
    ex = np.zeros((nx, ny + 1), dtype=bool)
    ex[:, :-1] |= footprint
    ex[:, 1:] |= footprint
    ey = np.zeros((nx + 1, ny), dtype=bool)
    ey[:-1, :] |= footprint
    ey[1:, :] |= footprint
    return ex, ey


def voxelize(scene, cell_mm, margin_mm=0.0, cell_z_mm=None,
             reference_frequency_hz=DEFAULT_REFERENCE_FREQUENCY_HZ, cell_budget=None):
    """
    Rasterize ``scene`` with cubic-ish cells of ``cell_mm``.

    With a substrate the z spacing is adjusted so the slab is an integer
    number of cells (at least one). Scenes with an explicit domain are
    gridded exactly over that box and ignore ``margin_mm``.
    """
    if not cell_mm > 0.0:
        raise GeometryError(f"cell size must be > 0 mm, got {cell_mm}")
    lo, hi = scene.bounding_box()
    warnings = []

    if scene.domain_mm is not None:
        counts = []
        for axis in range(3):
            span = hi[axis] - lo[axis]
            counts.append(max(1, int(round(span / cell_mm))))
        nx, ny, nz = counts
        dx = (hi[0] - lo[0]) / nx
        dy = (hi[1] - lo[1]) / ny
        dz = (hi[2] - lo[2]) / nz
        ox, oy, oz = lo
        k_ground = k_top = int(round((0.0 - oz) / dz)) if oz <= 0.0 <= hi[2] else None
    else:
        ox, nx = _axis_layout(lo[0], hi[0], cell_mm, margin_mm)
        oy, ny = _axis_layout(lo[1], hi[1], cell_mm, margin_mm)
        dx = dy = cell_mm
        if scene.substrate is not None:
            h = scene.substrate.spec.height_mm
            n_sub = max(1, int(round(h / (cell_z_mm or cell_mm))))
            dz = h / n_sub
            mz = int(math.ceil(margin_mm / dz - 1e-9)) if margin_mm > 0 else 0
            nz = n_sub + 2 * mz
            oz = -mz * dz
            k_ground, k_top = mz, mz + n_sub
        else:
            dz = cell_z_mm or cell_mm
            oz, nz = _axis_layout(lo[2], hi[2], dz, margin_mm)
            k_ground = k_top = int(round((0.0 - oz) / dz))

    check_cell_budget(nx * ny * nz, cell_budget)

    min_feature = scene.metadata.get("min_feature_mm")
    if min_feature and cell_mm > 0.5 * min_feature:
        message = (f"cell {cell_mm} mm is coarser than half the smallest slot "
                   f"({min_feature} mm); slots may close up")
        print(f"⚠️  {message}")
        warnings.append(message)

    grid = MaterialGrid.vacuum(nx, ny, nz, dx * MM, dy * MM, dz * MM,
                               origin_m=(ox * MM, oy * MM, oz * MM))
    grid.k_ground, grid.k_top = k_ground, k_top
    grid.warnings = warnings

    xc = ox + (np.arange(nx) + 0.5) * dx
    yc = oy + (np.arange(ny) + 0.5) * dy
    gx, gy = np.meshgrid(xc, yc, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel()])

    if scene.substrate is not None:
        spec = scene.substrate.spec
        x0, y0, x1, y1 = scene.substrate.extents_mm
        slab = (gx >= x0) & (gx <= x1) & (gy >= y0) & (gy <= y1)
        eps_plane = np.where(slab, spec.relative_permittivity, 1.0)
        tand_plane = np.where(slab, spec.loss_tangent, 0.0)
        for prim in scene.primitives:
            if prim.layer != "substrate":
                continue
            inside = prim.contains(centers).reshape(nx, ny)
            if prim.operation == "add":
                eps_plane = np.where(inside, prim.material.relative_permittivity, eps_plane)
                tand_plane = np.where(inside, prim.material.loss_tangent, tand_plane)
            else:
                eps_plane = np.where(inside, 1.0, eps_plane)
                tand_plane = np.where(inside, 0.0, tand_plane)
        sigma_plane = 2.0 * math.pi * reference_frequency_hz * epsilon_0 * eps_plane * tand_plane
        grid.eps_r[:, :, k_ground:k_top] = eps_plane[:, :, None]
        grid.sigma[:, :, k_ground:k_top] = sigma_plane[:, :, None]

    planes = {"ground": k_ground, "top": k_top}
    for layer in ("ground", "top"):
        if not any(p.layer == layer for p in scene.primitives):
            continue
        footprint = scene.layer_mask(layer, centers).reshape(nx, ny)
        grid.footprints[layer] = footprint
        k = planes[layer]
        if k is None or not 0 <= k <= nz:
            raise GeometryError(f"{layer} layer plane lies outside the grid")
        ex, ey = _edge_masks(footprint)
        grid.pec_x[:, :, k] |= ex
        grid.pec_y[:, :, k] |= ey

    for wire in scene.wires:
        axis = "xyz".index(wire.axis)
        start = grid.node_index(tuple(v * MM for v in wire.start_mm))
        end = grid.node_index(tuple(v * MM for v in wire.end_mm))
        i, j, k = start
        n = end[axis] - start[axis]
        if wire.axis == "x":
            grid.pec_x[i:i + n, j, k] = True
        elif wire.axis == "y":
            grid.pec_y[i, j:j + n, k] = True
        else:
            grid.pec_z[i, j, k:k + n] = True

    return grid
