import numpy as np
import pytest
from scipy.constants import c as C0

from errors import EnergyAccountingError, FrequencyLookupError
from huygens import HuygensData, HuygensFace
from ntff import ETA0, ntff_transform, radiated_power

F_HZ = 10e9
K = 2 * np.pi * F_HZ / C0
HALF_SIDE = 5e-3
POINTS = 40
THETA = np.linspace(0.0, 180.0, 37)
PHI = np.linspace(0.0, 360.0, 37)


def hertzian_fields(points, moment=1.0):
    """Exact E, H of a z-directed current element at the origin (exp(-jkr) convention)."""
    x, y, z = points.T
    r = np.sqrt(x ** 2 + y ** 2 + z ** 2)
    theta = np.arccos(z / r)
    phi = np.arctan2(y, x)
    jkr = 1j * K * r
    phase = np.exp(-jkr)
    h_phi = 1j * K * moment * np.sin(theta) / (4 * np.pi * r) * (1 + 1 / jkr) * phase
    e_r = ETA0 * moment * np.cos(theta) / (2 * np.pi * r ** 2) * (1 + 1 / jkr) * phase
    e_theta = (1j * ETA0 * K * moment * np.sin(theta) / (4 * np.pi * r)
               * (1 + 1 / jkr - 1 / (K * r) ** 2) * phase)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    r_hat = np.column_stack([st * cp, st * sp, ct])
    theta_hat = np.column_stack([ct * cp, ct * sp, -st])
    phi_hat = np.column_stack([-sp, cp, np.zeros_like(sp)])
    e = e_r[:, None] * r_hat + e_theta[:, None] * theta_hat
    h = h_phi[:, None] * phi_hat
    return e, h


def cube_faces():
    step = 2 * HALF_SIDE / POINTS
    u = -HALF_SIDE + (np.arange(POINTS) + 0.5) * step
    a, b = (g.ravel() for g in np.meshgrid(u, u, indexing="ij"))
    faces = []
    for axis in range(3):
        others = [ax for ax in range(3) if ax != axis]
        for sign in (-1.0, 1.0):
            positions = np.zeros((len(a), 3))
            positions[:, axis] = sign * HALF_SIDE
            positions[:, others[0]] = a
            positions[:, others[1]] = b
            normal = np.zeros(3)
            normal[axis] = sign
            e, h = hertzian_fields(positions)
            faces.append(HuygensFace(len(faces), normal, positions, step ** 2, e[None], h[None]))
    return HuygensData(np.array([F_HZ]), faces)


@pytest.fixture(scope="module")
def dipole_box():
    return cube_faces()


@pytest.fixture(scope="module")
def dipole_pattern(dipole_box):
    return ntff_transform(dipole_box, F_HZ, THETA, PHI)


class TestHertzianDipole:
    def test_radiated_power(self, dipole_box):
        expected = ETA0 * K ** 2 / (12 * np.pi)
        assert radiated_power(dipole_box.faces, 0) == pytest.approx(expected, rel=0.01)

    def test_peak_directivity(self, dipole_pattern):
        assert dipole_pattern.directivity.max() == pytest.approx(1.5, rel=0.01)
        assert dipole_pattern.peak_directivity_dbi == pytest.approx(1.76, abs=0.05)

    def test_directivity_averages_to_one(self, dipole_pattern):
        assert dipole_pattern.sphere_average() == pytest.approx(1.0, rel=0.01)

    def test_null_along_the_axis(self, dipole_pattern):
        assert dipole_pattern.value_at(0.0, 0.0) < 1e-2
        assert dipole_pattern.value_at(90.0, 45.0) == pytest.approx(1.5, rel=0.01)

    def test_polarization_is_theta(self, dipole_pattern):
        assert np.abs(dipole_pattern.e_phi).max() < 1e-2 * np.abs(dipole_pattern.e_theta).max()

    def test_gain_is_efficiency_times_directivity(self, dipole_box):
        p_rad = radiated_power(dipole_box.faces, 0)
        pattern = ntff_transform(dipole_box, F_HZ, THETA, PHI, input_power_w=2 * p_rad)
        assert pattern.efficiency == pytest.approx(0.5)
        np.testing.assert_allclose(pattern.gain, 0.5 * pattern.directivity)

    def test_lossless_input_gives_unit_efficiency(self, dipole_box):
        p_rad = radiated_power(dipole_box.faces, 0)
        pattern = ntff_transform(dipole_box, F_HZ, THETA, PHI, input_power_w=p_rad)
        assert pattern.efficiency == pytest.approx(1.0, abs=0.02)
        assert not pattern.warnings
        np.testing.assert_allclose(pattern.gain, pattern.directivity)

    def test_missing_input_power_is_flagged(self, dipole_pattern):
        assert dipole_pattern.efficiency is None
        assert any("efficiency unknown" in w for w in dipole_pattern.warnings)

    def test_small_excess_is_clamped(self, dipole_box):
        p_rad = radiated_power(dipole_box.faces, 0)
        pattern = ntff_transform(dipole_box, F_HZ, THETA, PHI, input_power_w=p_rad / 1.005)
        assert pattern.efficiency == 1.0
        assert pattern.warnings

    def test_large_excess_is_an_error(self, dipole_box):
        p_rad = radiated_power(dipole_box.faces, 0)
        with pytest.raises(EnergyAccountingError):
            ntff_transform(dipole_box, F_HZ, THETA, PHI, input_power_w=p_rad / 1.1)


class TestLookupAndFiles:
    def test_unrecorded_frequency(self, dipole_box):
        with pytest.raises(FrequencyLookupError):
            ntff_transform(dipole_box, 12e9)

    def test_surface_file(self, dipole_box, tmp_path):
        loaded = HuygensData.read(dipole_box.write(tmp_path / "huygens.bin"))
        np.testing.assert_array_equal(loaded.frequencies_hz, dipole_box.frequencies_hz)
        assert len(loaded.faces) == 6
        np.testing.assert_array_equal(loaded.faces[3].e, dipole_box.faces[3].e)
        np.testing.assert_array_equal(loaded.faces[3].positions, dipole_box.faces[3].positions)

    def test_cut_joins_both_half_planes(self, dipole_pattern):
        angles, gain = dipole_pattern.cut(0.0)
        assert len(angles) == 2 * len(THETA) - 1
        assert gain[np.argmin(np.abs(angles + 90.0))] == pytest.approx(gain[np.argmin(np.abs(angles - 90.0))])
