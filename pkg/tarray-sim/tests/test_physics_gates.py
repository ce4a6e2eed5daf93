"""
End-to-end solver checks against closed-form references. Each builds a
fixture scene, runs the full FDTD loop and compares with an analytic value.
"""

import numpy as np
import pytest

from analysis import accepted_power, estimate_resonances, s11_from_port
from em_solver import SimulationSettings, SourceSpec, run_simulation
from ntff import ntff_transform
from oracles import CavitySpec, cavity_resonance, dipole_directivity, to_dbi
from presets import build_preset

pytestmark = pytest.mark.slow

TE101_HZ = cavity_resonance(CavitySpec(20, 10, 25))


def settings(cell_mm, **kwargs):
    return SimulationSettings(cell_mm=cell_mm, progress_every=0, workers=1, **kwargs)


def cavity_error(cell_mm, n_steps):
    out = run_simulation(build_preset("cavity-te101"), source=SourceSpec(), n_steps=n_steps,
                         settings=settings(cell_mm, check_every=0))
    found = [r["frequency_hz"] for r in estimate_resonances(out.record, 4e9, 16e9)]
    nearest = min(found, key=lambda f: abs(f - TE101_HZ))
    return abs(nearest - TE101_HZ) / TE101_HZ


class TestCavity:
    def test_resonance_converges_at_second_order(self):
        coarse = cavity_error(0.5, 2500)
        fine = cavity_error(0.25, 5000)
        assert coarse < 0.02
        assert fine < coarse
        assert 2.5 <= coarse / fine <= 6.0

    def test_energy_is_conserved_after_the_source(self):
        source = SourceSpec()
        out = run_simulation(build_preset("cavity-te101"), source=source, n_steps=10700,
                             settings=settings(0.5, check_every=50))
        late = [w for n, w in out.energy_history if n * out.dt > source.end_time_s]
        assert late[-1] > 0.0
        assert (max(late) - min(late)) / max(late) <= 0.01


class TestPortTerminations:
    def test_matched_load_reflects_nothing(self):
        out = run_simulation(build_preset("matched-load"), settings=settings(0.2))
        s = s11_from_port(out.record, decayed=out.decayed)
        assert np.nanmax(s.s11_db[s.valid]) <= -30.0

    def test_open_port_reflects_everything(self):
        out = run_simulation(build_preset("open-port"), settings=settings(0.2))
        s = s11_from_port(out.record, decayed=out.decayed)
        np.testing.assert_allclose(s.s11_db[s.valid], 0.0, atol=0.2)


class TestDipoles:
    def test_hertzian_directivity(self):
        out = run_simulation(build_preset("dipole-hertzian"), settings=settings(0.2))
        pattern = ntff_transform(out.huygens, 10e9)
        assert pattern.peak_directivity_dbi == pytest.approx(to_dbi(dipole_directivity("hertzian")), abs=0.15)
        assert pattern.sphere_average() == pytest.approx(1.0, abs=0.01)

    def test_halfwave_directivity(self):
        out = run_simulation(build_preset("dipole-halfwave"), settings=settings(0.5))
        pattern = ntff_transform(out.huygens, 10e9)
        assert pattern.peak_directivity_dbi == pytest.approx(to_dbi(dipole_directivity("halfwave")), abs=0.2)
        assert pattern.sphere_average() == pytest.approx(1.0, abs=0.01)

    def test_lossless_dipole_radiates_its_accepted_power(self):
        out = run_simulation(build_preset("dipole-halfwave"), settings=settings(0.5))
        pattern = ntff_transform(out.huygens, 10e9)
        efficiency = pattern.radiated_power_w / accepted_power(out.record, 10e9)
        assert efficiency == pytest.approx(1.0, abs=0.02)


class TestEfficiency:
    def test_efficiency_falls_with_loss_tangent(self):
        efficiencies = []
        for tan_d in (0.01, 0.05, 0.2):
            out = run_simulation(build_preset("single-patch", tan_d=tan_d),
                                 settings=settings(0.5, frequencies_hz=(15e9,), max_steps=8000))
            p_in = accepted_power(out.record, 15e9)
            efficiencies.append(ntff_transform(out.huygens, 15e9, input_power_w=p_in).efficiency)
        assert efficiencies[0] > efficiencies[1] > efficiencies[2]
        assert 0.0 < efficiencies[2]
