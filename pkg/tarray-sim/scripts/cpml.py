"""
Convolutional PML (complex-frequency-shifted, recursive convolution).

The bulk Yee update runs with plain spatial derivatives everywhere; this
module then corrects the curl terms inside the absorbing slabs:

    d/du  ->  (1/kappa) d/du + psi,   psi <- b * psi + a * d/du

Profiles are graded with depth rho in [0, 1] into the layer:
sigma = sigma_max rho^m, kappa = 1 + (kappa_max - 1) rho^m and a linearly
graded alpha that is largest at the inner interface.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0

AXES = "xyz"

# (target, source, derivative axis, sign of the term in the curl)
H_TERMS = (
    ("hx", "ez", 1, +1.0), ("hx", "ey", 2, -1.0),
    ("hy", "ex", 2, +1.0), ("hy", "ez", 0, -1.0),
    ("hz", "ey", 0, +1.0), ("hz", "ex", 1, -1.0),
)
E_TERMS = (
    ("ex", "hz", 1, +1.0), ("ex", "hy", 2, -1.0),
    ("ey", "hx", 2, +1.0), ("ey", "hz", 0, -1.0),
    ("ez", "hy", 0, +1.0), ("ez", "hx", 1, -1.0),
)


@dataclass(frozen=True)
class CPMLSettings:
    cells: int = 10
    order: float = 3.0
    kappa_max: float = 5.0
    alpha_max: float = 0.05
    sigma_factor: float = 1.0
    eps_r: float = 1.0

    def sigma_max(self, spacing):
        """Optimal conductivity (m + 1) / (150 pi d sqrt(eps_r)), scaled by ``sigma_factor``."""
        return self.sigma_factor * (self.order + 1.0) / (150.0 * math.pi * spacing * math.sqrt(self.eps_r))


def _depth(positions, n_cells, pml):
    rho = np.zeros_like(positions, dtype=float)
    lo = positions < pml
    hi = positions > n_cells - pml
    rho[lo] = (pml - positions[lo]) / pml
    rho[hi] = (positions[hi] - (n_cells - pml)) / pml
    return np.clip(rho, 0.0, 1.0)


def _coefficients(rho, settings, spacing, dt):
    sigma = settings.sigma_max(spacing) * rho ** settings.order
    kappa = 1.0 + (settings.kappa_max - 1.0) * rho ** settings.order
    alpha = np.where(rho > 0.0, settings.alpha_max * (1.0 - rho), 0.0)
    b = np.exp(-(sigma / kappa + alpha) * dt / epsilon_0)
    denom = sigma * kappa + kappa ** 2 * alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(sigma > 0.0, sigma / denom * (b - 1.0), 0.0)
    return a, b, kappa


class _Slab:
    """Memory variable and coefficients for one term on one side of one axis."""

    def __init__(self, target, source, axis, sign, target_slice, source_slice, a, b, kappa, shape):
        self.target = target
        self.source = source
        self.axis = axis
        self.sign = sign
        self.target_slice = target_slice
        self.source_slice = source_slice
        bshape = [1, 1, 1]
        bshape[axis] = -1
        self.a = a.reshape(bshape)
        self.b = b.reshape(bshape)
        self.kappa_term = (1.0 / kappa - 1.0).reshape(bshape)
        self.psi = np.zeros(shape)

    def index(self, which):
        sl = [slice(None)] * 3
        sl[self.axis] = self.target_slice if which == "target" else self.source_slice
        return tuple(sl)

    def correction(self, fields, inv_spacing):
        derivative = np.diff(fields[self.source][self.index("source")], axis=self.axis) * inv_spacing
        self.psi *= self.b
        self.psi += self.a * derivative
        return self.sign * (self.kappa_term * derivative + self.psi)


class CPML:
    """
    Absorbing slabs on all six faces of a grid of ``shape`` cells
    (PML cells included). ``pml_cells = 0`` makes every call a no-op.
    """

    def __init__(self, shape, spacing, dt, settings=None):
        self.settings = settings or CPMLSettings()
        self.shape = tuple(shape)
        self.spacing = tuple(spacing)
        self.inv_spacing = tuple(1.0 / d for d in spacing)
        self.dt = dt
        self.h_slabs = []
        self.e_slabs = []
        p = self.settings.cells
        if p <= 0:
            return
        if min(self.shape) <= 2 * p:
            raise ValueError(f"grid {self.shape} is too small for {p} PML cells per face")
        self._build(p)

    @property
    def active(self):
        return bool(self.h_slabs)

    def _field_shape(self, name):
        nx, ny, nz = self.shape
        comp = AXES.index(name[1])
        dims = [nx + 1, ny + 1, nz + 1]
        if name[0] == "e":
            dims[comp] -= 1
        else:
            dims = [n - 1 for n in dims]
            dims[comp] += 1
        return dims

    def _build(self, p):
        for axis in range(3):
            n = self.shape[axis]
            d = self.spacing[axis]
            half = np.arange(n) + 0.5
            nodes = np.arange(n + 1, dtype=float)
            ah, bh, kh = _coefficients(_depth(half, n, p), self.settings, d, self.dt)
            ae, be, ke = _coefficients(_depth(nodes, n, p), self.settings, d, self.dt)

            # H lives at half nodes along the derivative axis
            for target, source, term_axis, sign in H_TERMS:
                if term_axis != axis:
                    continue
                for t_sl, s_sl in ((slice(0, p), slice(0, p + 1)),
                                   (slice(n - p, n), slice(n - p, n + 1))):
                    shape = self._field_shape(target)
                    shape[axis] = p
                    self.h_slabs.append(_Slab(target, source, axis, sign, t_sl, s_sl,
                                              ah[t_sl], bh[t_sl], kh[t_sl], shape))

            # E interior nodes 1..n-1 along the derivative axis
            for target, source, term_axis, sign in E_TERMS:
                if term_axis != axis:
                    continue
                for t_sl, s_sl in ((slice(1, p + 1), slice(0, p + 1)),
                                   (slice(n - p, n), slice(n - p - 1, n))):
                    shape = self._field_shape(target)
                    shape[axis] = p
                    self.e_slabs.append(_Slab(target, source, axis, sign, t_sl, s_sl,
                                              ae[t_sl], be[t_sl], ke[t_sl], shape))

    def apply_h(self, fields, db):
        """Correct H after its bulk update; ``db`` is dt / mu0."""
        for slab in self.h_slabs:
            corr = slab.correction(fields, self.inv_spacing[slab.axis])
            fields[slab.target][slab.index("target")] -= db * corr

    def apply_e(self, fields, cb):
        """Correct E after its bulk update; ``cb`` maps component name to its Cb array."""
        for slab in self.e_slabs:
            corr = slab.correction(fields, self.inv_spacing[slab.axis])
            idx = slab.index("target")
            fields[slab.target][idx] += cb[slab.target][idx] * corr


def apply_cpml(state, cpml, phase, coefficient):
    """Run the H or E correction pass on a FieldState; no-op without PML cells."""
    if cpml is None or not cpml.active:
        return state
    fields = state.as_dict()
    if phase == "h":
        cpml.apply_h(fields, coefficient)
    else:
        cpml.apply_e(fields, coefficient)
    return state
