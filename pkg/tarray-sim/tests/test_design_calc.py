import json
import math

import pytest
from scipy.constants import c as C0

from design_calc import (
    FABRICATED_SUBSTRATE,
    PatchDesign,
    SubstrateSpec,
    compute_effective_permittivity,
    compute_length_extension,
    compute_patch_length,
    compute_patch_width,
    compute_substrate_dims,
    compute_substrate_height,
    design_patch,
)
from errors import DesignDomainError, DesignError, InfeasibleDesignError, SingularityError
from oracles import tline_patch_resonance

HALF_WAVE_6GHZ_MM = C0 / 6e9 / 2 / 1e-3


class TestComputePatchWidth:
    def test_fabricated_substrate_at_6ghz(self):
        assert compute_patch_width(6e9, 2.2) == pytest.approx(19.750, abs=5e-4)

    def test_matches_closed_form(self):
        expected = C0 / (2 * 6e9) * math.sqrt(2 / 3.2) / 1e-3
        assert compute_patch_width(6e9, 2.2) == pytest.approx(expected, rel=1e-12)

    def test_vacuum_is_half_wavelength(self):
        assert compute_patch_width(6e9, 1.0) == pytest.approx(HALF_WAVE_6GHZ_MM, rel=1e-12)
        assert compute_patch_width(6e9, 1.0) == pytest.approx(24.983, abs=5e-4)

    def test_high_permittivity(self):
        assert compute_patch_width(10e9, 4.4) == pytest.approx(9.123, abs=5e-4)

    def test_narrows_as_permittivity_rises(self):
        widths = [compute_patch_width(6e9, er) for er in (1.0, 2.2, 3.5, 4.4, 10.2)]
        assert all(a > b for a, b in zip(widths, widths[1:]))

    @pytest.mark.parametrize("f_r, er", [(0.0, 2.2), (-1e9, 2.2), (6e9, 0.5)])
    def test_domain_errors(self, f_r, er):
        with pytest.raises(DesignDomainError):
            compute_patch_width(f_r, er)


class TestEffectivePermittivity:
    def test_wide_patch(self):
        assert compute_effective_permittivity(2.2, 0.766, 19.750) == pytest.approx(2.0956, abs=1e-4)

    def test_table_width(self):
        assert compute_effective_permittivity(2.2, 0.766, 7.41) == pytest.approx(2.0008, abs=1e-4)

    def test_vacuum_collapses_to_one(self):
        assert compute_effective_permittivity(1.0, 0.3, 12.0) == 1.0

    def test_bounds(self):
        for h, w in [(0.1, 50.0), (0.766, 7.41), (3.0, 1.0)]:
            e_eff = compute_effective_permittivity(2.2, h, w)
            assert (2.2 + 1) / 2 < e_eff <= 2.2

    def test_zero_height_rejected(self):
        with pytest.raises(DesignDomainError):
            compute_effective_permittivity(2.2, 0.0, 7.41)

    def test_falls_as_substrate_thickens(self):
        values = [compute_effective_permittivity(2.2, h, 7.41) for h in (0.1, 0.254, 0.766, 1.524, 3.0)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestLengthExtension:
    def test_wide_patch(self):
        assert compute_length_extension(2.0956, 0.766, 19.750) == pytest.approx(0.4031, abs=1e-4)

    def test_table_patch(self):
        assert compute_length_extension(2.0008, 0.766, 7.41) == pytest.approx(0.3953, abs=1e-4)

    def test_scales_with_height_and_width(self):
        base = compute_length_extension(2.0956, 0.766, 19.750)
        doubled = compute_length_extension(2.0956, 1.532, 39.50)
        assert doubled == pytest.approx(2 * base, rel=1e-12)
        assert doubled == pytest.approx(0.8063, abs=1e-4)

    def test_singular_denominator(self):
        with pytest.raises(SingularityError):
            compute_length_extension(0.258, 0.766, 7.41)


class TestPatchLength:
    def test_wide_patch(self):
        assert compute_patch_length(6e9, 2.0956, 0.4031) == pytest.approx(16.855, abs=1e-3)

    def test_vacuum_without_extension(self):
        assert compute_patch_length(6e9, 1.0, 0.0) == pytest.approx(HALF_WAVE_6GHZ_MM, rel=1e-12)

    def test_both_edges_subtracts_twice(self):
        single = compute_patch_length(6e9, 2.0956, 0.4031)
        both = compute_patch_length(6e9, 2.0956, 0.4031, both_edges=True)
        assert single - both == pytest.approx(0.4031, rel=1e-9)

    def test_infeasible_when_extension_exceeds_half_guided_wavelength(self):
        with pytest.raises(InfeasibleDesignError):
            compute_patch_length(60e9, 2.0956, 2.0)


class TestSubstrate:
    def test_dims_of_table_patch(self):
        length, width = compute_substrate_dims(6.23, 7.41, 0.766)
        assert length == pytest.approx(10.826, abs=1e-9)
        assert width == pytest.approx(12.006, abs=1e-9)

    def test_dims_of_6ghz_design(self):
        length, width = compute_substrate_dims(16.855, 19.750, 2.0414)
        assert length == pytest.approx(29.103, abs=1e-3)
        assert width == pytest.approx(31.998, abs=1e-3)

    def test_dims_approach_patch_as_height_vanishes(self):
        length, width = compute_substrate_dims(6.23, 7.41, 1e-9)
        assert (length, width) == pytest.approx((6.23, 7.41), abs=1e-8)

    def test_height_rule(self):
        assert compute_substrate_height(6e9, 2.2) == pytest.approx(2.0414, abs=1e-4)
        assert compute_substrate_height(15.35e9, 2.2) == pytest.approx(0.798, abs=1e-3)

    def test_height_rule_in_vacuum(self):
        wavelength_mm = C0 / 6e9 / 1e-3
        assert compute_substrate_height(6e9, 1.0) == pytest.approx(0.0606 * wavelength_mm, rel=1e-12)

    def test_spec_validation(self):
        with pytest.raises(DesignDomainError):
            SubstrateSpec(2.2, -0.1, 0.766)
        with pytest.raises(DesignDomainError):
            SubstrateSpec(2.2, 0.0, 0.0)


class TestDesignPatch:
    def test_chain_on_fabricated_substrate(self):
        design = design_patch(6e9, FABRICATED_SUBSTRATE, h_override=0.766)
        assert design.patch_width_mm == pytest.approx(19.750, abs=5e-4)
        assert design.effective_permittivity == pytest.approx(2.0956, abs=1e-4)
        assert design.length_extension_mm == pytest.approx(0.4031, abs=1e-4)
        assert design.patch_length_mm == pytest.approx(16.855, abs=1e-3)
        assert design.substrate_length_mm == pytest.approx(21.451, abs=1e-3)
        assert design.substrate_width_mm == pytest.approx(24.346, abs=1e-3)

    def test_vacuum_limit(self):
        design = design_patch(6e9, SubstrateSpec(1.0, 0.0, 1.0), h_override=1.0)
        assert design.patch_width_mm == pytest.approx(HALF_WAVE_6GHZ_MM, rel=1e-12)
        assert design.effective_permittivity == 1.0
        assert design.patch_length_mm == pytest.approx(
            HALF_WAVE_6GHZ_MM - design.length_extension_mm, rel=1e-12)

    def test_height_from_rule_is_self_consistent(self):
        design = design_patch(6e9, SubstrateSpec(2.2, 0.0, 1.0))
        assert design.height_mm == pytest.approx(2.0414, abs=1e-4)
        e_eff = compute_effective_permittivity(2.2, design.height_mm, design.patch_width_mm)
        dl = compute_length_extension(e_eff, design.height_mm, design.patch_width_mm)
        assert design.effective_permittivity == pytest.approx(e_eff, rel=1e-12)
        assert design.length_extension_mm == pytest.approx(dl, rel=1e-12)
        assert design.patch_length_mm == pytest.approx(compute_patch_length(6e9, e_eff, dl), rel=1e-12)

    def test_thick_substrate_at_60ghz_is_infeasible(self):
        with pytest.raises(DesignError):
            design_patch(60e9, SubstrateSpec(2.2, 0.0, 3.0), h_override=3.0)

    @pytest.mark.parametrize("f_r", [2e9, 6e9, 15.35e9])
    def test_length_inverts_to_the_design_frequency(self, f_r):
        design = design_patch(f_r, FABRICATED_SUBSTRATE, h_override=0.766)
        resonance = tline_patch_resonance(design.patch_length_mm, design.length_extension_mm,
                                          design.effective_permittivity)
        assert resonance.single_extension_hz == pytest.approx(f_r, rel=1e-9)

    def test_json_round_trip(self):
        design = design_patch(6e9, FABRICATED_SUBSTRATE, h_override=0.766)
        restored = PatchDesign.from_dict(json.loads(design.to_json()))
        assert restored == design
