import numpy as np
import pytest

from errors import GeometryBoundsError, GeometryError, GeometryOverlapError, GeometryPreconditionError
from geometry import (
    ArrayParams,
    FeedParams,
    Primitive,
    Scene,
    TSlotParams,
    apply_double_t_slots,
    build_patch_element,
    rectangle,
    rotate_points,
    tile_array,
)
from material_grid import voxelize
from presets import FIXTURES, PRESETS, build_preset, coerce_parameter, design_parameters, resolve_parameter

SLOTTED_ELEMENT_AREA = 6.23 * 7.41 - 2 * (2.4 * 0.48 + 0.4 * 0.72)
PAD_AREA = 2 * 2.0 * (2.77 - 0.2)


def sample_points(x0, x1, y0, y1, step=0.1):
    """Regular grid offset so no point lands on a polygon edge."""
    x, y = np.meshgrid(np.arange(x0, x1, step) + 0.0123, np.arange(y0, y1, step) + 0.0071)
    return np.column_stack([x.ravel(), y.ravel()])


class TestPatchElement:
    def test_table_patch_area(self):
        assert build_patch_element(6.23, 7.41).conductor_area() == pytest.approx(46.164, abs=5e-4)

    def test_designed_patch_area(self):
        assert build_patch_element(16.855, 19.750).conductor_area() == pytest.approx(332.89, abs=5e-3)

    def test_degenerate_patch(self):
        with pytest.raises(GeometryPreconditionError):
            build_patch_element(0.0, 0.0)


class TestDoubleTSlots:
    def test_remaining_area(self):
        slotted = apply_double_t_slots(build_patch_element(6.23, 7.41), TSlotParams())
        assert slotted.conductor_area() == pytest.approx(43.284, abs=5e-4)
        assert slotted.conductor_area() == pytest.approx(SLOTTED_ELEMENT_AREA, rel=1e-12)

    def test_slot_outside_patch(self):
        with pytest.raises(GeometryBoundsError):
            apply_double_t_slots(build_patch_element(6.23, 7.41), TSlotParams(pair_separation_mm=10.0))

    def test_overlapping_slots(self):
        with pytest.raises(GeometryOverlapError):
            apply_double_t_slots(build_patch_element(6.23, 7.41), TSlotParams(pair_separation_mm=0.5))

    def test_zero_area_slot(self):
        with pytest.raises(GeometryPreconditionError):
            TSlotParams(slot_width_mm=0.0, bar_breadth_mm=0.0)

    def test_slots_are_symmetric_about_the_patch_axis(self):
        slotted = apply_double_t_slots(build_patch_element(6.23, 7.41), TSlotParams())
        cuts = [p for p in slotted.primitives if p.operation == "subtract"]
        assert len(cuts) == 2
        assert cuts[0].centroid[0] == pytest.approx(-cuts[1].centroid[0])


class TestTileArray:
    def test_overall_width(self):
        scene = tile_array(build_patch_element(6.23, 7.41), ArrayParams(gap_mm=2.2))
        x0, _, x1, _ = scene.metal_bounding_box()
        assert x1 - x0 == pytest.approx(26.63, abs=1e-9)

    def test_alternative_gap(self):
        scene = tile_array(build_patch_element(6.23, 7.41), ArrayParams(gap_mm=1.59))
        x0, _, x1, _ = scene.metal_bounding_box()
        assert x1 - x0 == pytest.approx(25.41, abs=1e-9)

    def test_single_element_box(self):
        scene = tile_array(build_patch_element(6.23, 7.41), ArrayParams(rows=1, cols=1, gap_mm=5.0))
        assert scene.metal_bounding_box() == pytest.approx((-3.705, -3.115, 3.705, 3.115))

    def test_alternating_rotation(self):
        scene = tile_array(build_patch_element(6.23, 7.41), ArrayParams())
        angles = {(e["row"], e["col"]): e["rotation_deg"] for e in scene.elements}
        assert angles[(0, 0)] == 0.0
        assert angles[(0, 1)] == 90.0
        assert angles[(1, 1)] == 180.0

    def test_negative_gap(self):
        with pytest.raises(GeometryPreconditionError):
            ArrayParams(gap_mm=-1.0)

    def test_overlapping_elements(self):
        params = ArrayParams(rows=1, cols=2, gap_mm=0.0, element_rotation_deg=45.0, schedule="uniform")
        with pytest.raises(GeometryOverlapError):
            tile_array(build_patch_element(6.23, 7.41), params)


class TestFeed:
    def test_strip_areas(self):
        assert FeedParams(0.8, 2.77).strip_area_mm2 == pytest.approx(2.216, abs=1e-12)
        assert FeedParams(0.8, 0.78).strip_area_mm2 == pytest.approx(0.624, abs=1e-12)

    def test_zero_length(self):
        with pytest.raises(GeometryPreconditionError):
            FeedParams(0.8, 0.0)

    def test_single_patch_top_layer(self):
        scene = build_preset("single-patch")
        assert scene.conductor_area("top") == pytest.approx(46.1643 + 2.216 + PAD_AREA, rel=1e-9)

    def test_port_sits_at_strip_end(self):
        scene = build_preset("single-patch")
        x, y, z = scene.port.position_mm
        assert (x, z) == (0.0, 0.0)
        assert y == pytest.approx(-3.115 - 2.77)
        assert scene.port_length_mm() == pytest.approx(0.766)


class TestSlottedArray:
    def test_overall_dimensions(self):
        dims = build_preset("paper-3x3").overall_dimensions_mm()
        assert dims["width_mm"] == pytest.approx(26.63, abs=1e-9)
        assert dims["length_mm"] == pytest.approx(30.9, abs=1e-9)
        assert dims["thickness_mm"] == pytest.approx(0.766)

    def test_thin_variant(self):
        dims = build_preset("paper-3x3-thin").overall_dimensions_mm()
        assert dims["thickness_mm"] == pytest.approx(0.1)
        assert dims["width_mm"] == pytest.approx(26.63, abs=1e-9)

    def test_top_layer_area(self):
        scene = build_preset("paper-3x3")
        expected = 9 * SLOTTED_ELEMENT_AREA + 2.216 + PAD_AREA
        assert scene.conductor_area("top") == pytest.approx(expected, rel=1e-9)

    def test_ground_with_rear_slot(self):
        scene = build_preset("paper-3x3")
        assert scene.conductor_area("ground") == pytest.approx(821.43, abs=5e-3)
        assert scene.conductor_area("ground") == pytest.approx(26.63 * 30.9 - 1.44, rel=1e-9)

    def test_rear_slot_scale_limits(self):
        with pytest.raises(GeometryPreconditionError):
            build_preset("paper-3x3", rear_scale=0.0)
        with pytest.raises(GeometryBoundsError):
            build_preset("paper-3x3", rear_scale=30.0)

    def test_nine_degree_variant_builds(self):
        scene = build_preset("paper-3x3", rotation=9.0)
        assert len(scene.elements) == 9
        assert {e["rotation_deg"] for e in scene.elements} == {0.0, 9.0, 18.0, 27.0, 36.0}
        assert scene.port is not None

    def test_gap_override(self):
        scene = build_preset("paper-3x3", g=1.59)
        x0, _, x1, _ = scene.metal_bounding_box()
        assert x1 - x0 == pytest.approx(25.41, abs=1e-9)

    def test_substrate_shorter_than_metal(self):
        with pytest.raises(GeometryError):
            build_preset("paper-3x3", substrate_length_mm=10.0)

    def test_small_feature_recorded(self):
        assert build_preset("paper-3x3").metadata["min_feature_mm"] == pytest.approx(0.4)


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_every_preset_validates(self, name):
        scene = build_preset(name).validate()
        assert scene.port is not None

    def test_fixtures_are_listed(self):
        assert set(FIXTURES) <= set(PRESETS)

    def test_unknown_preset(self):
        with pytest.raises(GeometryPreconditionError):
            build_preset("paper-4x4")

    def test_parameter_aliases(self):
        assert resolve_parameter("t_l") == "bar_length_mm"
        assert design_parameters(g=1.59).gap_mm == 1.59
        with pytest.raises(GeometryPreconditionError):
            resolve_parameter("bogus")

    def test_values_take_the_field_type(self):
        assert coerce_parameter("rows", 3.0) == 3
        assert isinstance(coerce_parameter("cols", "2"), int)
        assert coerce_parameter("g", "1.59") == 1.59
        assert design_parameters(rows="2").rows == 2
        with pytest.raises(GeometryPreconditionError):
            coerce_parameter("rows", 2.5)
        with pytest.raises(GeometryPreconditionError):
            coerce_parameter("g", "wide")

    def test_alternative_slot_height(self):
        params = build_preset("double-t-alt").metadata["design_parameters"]
        assert params["arm_mm"] + params["bar_breadth_mm"] == pytest.approx(1.84)


class TestScene:
    def test_polygon_orientation_is_normalized(self):
        clockwise = ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0))
        assert Primitive(clockwise).area == pytest.approx(1.0)

    def test_self_crossing_polygon(self):
        with pytest.raises(GeometryPreconditionError):
            Primitive(((0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)))

    def test_subtraction_applies_in_order(self):
        scene = Scene(primitives=[Primitive(rectangle(0, 0, 4, 4)),
                                  Primitive(rectangle(1, 1, 2, 2), operation="subtract")])
        assert scene.contains_point("top", 0.5, 0.5)
        assert not scene.contains_point("top", 1.5, 1.5)
        assert scene.conductor_area("top") == pytest.approx(15.0)

    def test_quarter_turn_preserves_area(self):
        scene = build_preset("double-t")
        assert scene.rotated(90.0).conductor_area("top") == pytest.approx(scene.conductor_area("top"), rel=1e-12)

    def test_full_turn_keeps_the_footprint(self):
        scene = build_preset("double-t")
        points = sample_points(-6.0, 6.0, -8.0, 8.0)
        np.testing.assert_array_equal(scene.rotated(360.0).layer_mask("top", points),
                                      scene.layer_mask("top", points))

    def test_rotating_scene_and_points_together(self):
        scene = build_preset("double-t")
        points = sample_points(-6.0, 6.0, -8.0, 8.0)
        turned = np.array(rotate_points(points, 37.0))
        np.testing.assert_array_equal(scene.rotated(37.0).layer_mask("top", turned),
                                      scene.layer_mask("top", points))

    def test_repeated_subtraction_changes_nothing(self):
        cut = Primitive(rectangle(1, 1, 2, 2), operation="subtract")
        once = Scene(primitives=[Primitive(rectangle(0, 0, 4, 4)), cut])
        twice = Scene(primitives=[Primitive(rectangle(0, 0, 4, 4)), cut, cut])
        points = sample_points(-0.5, 4.5, -0.5, 4.5)
        np.testing.assert_array_equal(twice.layer_mask("top", points), once.layer_mask("top", points))
        assert voxelize(twice, 0.25).conductor_area("top") == voxelize(once, 0.25).conductor_area("top")

    def test_validate_requires_port(self):
        with pytest.raises(GeometryError):
            Scene(primitives=[Primitive(rectangle(0, 0, 1, 1))]).validate()

    def test_domain_bounds(self):
        scene = build_preset("matched-load")
        scene.primitives.append(Primitive(rectangle(1.0, 1.0, 3.0, 1.5)))
        with pytest.raises(GeometryBoundsError):
            scene.validate()

    def test_save_and_load_keep_fingerprint(self, tmp_path):
        scene = build_preset("paper-3x3")
        loaded = Scene.load(scene.save(tmp_path / "scene.json"))
        assert loaded.fingerprint() == scene.fingerprint()
        assert loaded.conductor_area("ground") == pytest.approx(scene.conductor_area("ground"))

    def test_units_must_be_mm(self):
        data = build_preset("single-patch").to_dict()
        data["units"] = "in"
        with pytest.raises(GeometryPreconditionError):
            Scene.from_dict(data)
