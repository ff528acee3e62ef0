import numpy as np
import pytest

from roomsynth import (
    OrientedBox,
    Scene,
    ToyConfig,
    generate_toy_scene,
    rasterize_floorplan,
    rasterize_layout,
)
from roomsynth.palette import MARKER_ALPHA, Palette
from roomsynth.perception import (
    classify_pixels,
    detect_objects,
    detections_from_json,
    detections_to_json,
    segment_rooms,
)
from roomsynth.raster import LayoutImage, WorldTransform


def one_box_scene(category="bed", cx=0.0, cy=0.0, length=200.0, width=100.0, rotate=0.0):
    return Scene(furniture=(OrientedBox(category, (cx, cy, 0.0), length, width, 40.0, rotate),))


class TestClassifyPixels:
    def test_bed_body_pixel(self, house_palette):
        img = np.full((4, 4, 3), (1.0, 0.7, 0.7))
        lm = classify_pixels(img, house_palette)
        assert lm.legend[lm.labels[0, 0] - 1] == ("bed", "body")

    def test_white_is_background(self, house_palette):
        img = np.ones((4, 4, 3))
        lm = classify_pixels(img, house_palette)
        assert np.all(lm.labels == 0)

    def test_far_from_everything_is_background(self, house_palette):
        img = np.full((2, 2, 3), (0.31, 0.77, 0.52))
        lm = classify_pixels(img, house_palette)
        assert np.all(lm.labels == 0)

    def test_marker_pixels_distinct(self, house_palette):
        marker = MARKER_ALPHA * np.array([1.0, 0.0, 0.0]) + (1 - MARKER_ALPHA)
        img = np.full((2, 2, 3), marker)
        lm = classify_pixels(img, house_palette)
        assert lm.legend[lm.labels[0, 0] - 1] == ("bed", "marker")

    def test_deterministic_and_total(self, house_palette):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, size=(32, 32, 3))
        a = classify_pixels(img, house_palette)
        b = classify_pixels(img, house_palette)
        assert np.array_equal(a.labels, b.labels)
        assert a.labels.shape == (32, 32)

    def test_ambiguous_palette_rejected(self):
        p = Palette({"a": ("808080", 0.3, 0), "b": ("818080", 0.3, 0)})
        with pytest.raises(Exception):
            classify_pixels(np.ones((2, 2, 3)), p)

    def test_survives_8bit_quantization(self, house_palette):
        img = np.full((2, 2, 3), (1.0, 0.7, 0.7))
        quantized = np.round(img * 255) / 255
        lm = classify_pixels(quantized, house_palette)
        assert lm.legend[lm.labels[0, 0] - 1] == ("bed", "body")


class TestDetectObjects:
    def test_single_box_round_trip(self, house_palette):
        scene = one_box_scene("sofa", 0.0, 0.0, 200.0, 100.0, 0.0)
        img = rasterize_layout(scene, house_palette, canvas=(256, 256), margin=8)
        dets = detect_objects(img, house_palette)
        assert len(dets) == 1
        d = dets[0]
        px_per_cm = img.transform.scale
        assert d.category.name == "sofa"
        assert abs(d.box.pos[0] - 0.0) * px_per_cm <= 2.0
        assert abs(d.box.pos[1] - 0.0) * px_per_cm <= 2.0
        assert abs(d.box.length - 200.0) * px_per_cm <= 3.0
        assert abs(d.box.width - 100.0) * px_per_cm <= 3.0
        assert d.box.rotate == 0.0
        assert d.orientation_confidence > 0.5

    @pytest.mark.parametrize("rotate", [0.0, 90.0, 180.0, 270.0])
    def test_four_way_orientation_exact(self, house_palette, rotate):
        scene = one_box_scene("bed", 10.0, -20.0, 220.0, 140.0, rotate)
        img = rasterize_layout(scene, house_palette, canvas=(256, 256), margin=8)
        dets = detect_objects(img, house_palette)
        assert len(dets) == 1
        assert dets[0].box.rotate == rotate

    def test_empty_image_no_detections(self, house_palette):
        img = LayoutImage(np.ones((64, 64, 3)), WorldTransform(1.0, 0, 64.0))
        assert detect_objects(img, house_palette) == []

    def test_two_disjoint_beds(self, house_palette):
        scene = Scene(
            furniture=(
                OrientedBox("bed", (-200.0, 0.0, 0.0), 180.0, 120.0, 40.0, 0.0),
                OrientedBox("bed", (200.0, 0.0, 0.0), 180.0, 120.0, 40.0, 0.0),
            )
        )
        img = rasterize_layout(scene, house_palette, canvas=(256, 256), margin=8)
        dets = detect_objects(img, house_palette)
        assert len(dets) == 2
        assert all(d.category.name == "bed" for d in dets)

    def test_min_area_filter(self, house_palette):
        # 2 cm box at ~0.25 px/cm is subpixel: nothing to detect.
        scene = Scene(
            furniture=(
                OrientedBox("bed", (0.0, 0.0, 0.0), 900.0, 900.0, 40.0, 0.0),
                OrientedBox("sofa", (0.0, 0.0, 0.0), 2.0, 2.0, 40.0, 0.0),
            )
        )
        img = rasterize_layout(scene, house_palette, canvas=(256, 256), margin=8)
        names = [d.category.name for d in detect_objects(img, house_palette)]
        assert names == ["bed"]

    def test_detection_masks_are_nonbackground(self, house_palette):
        scene = generate_toy_scene(21)
        img = rasterize_layout(scene, house_palette)
        lm = classify_pixels(img, house_palette)
        for d in detect_objects(img, house_palette):
            labels = lm.labels[d.pixel_mask[:, 0], d.pixel_mask[:, 1]]
            assert np.all(labels > 0)

    def test_continuous_rotation_kept_outside_snap_window(self, house_palette):
        scene = one_box_scene("bed", 0.0, 0.0, 300.0, 160.0, 45.0)
        img = rasterize_layout(scene, house_palette, canvas=(256, 256), margin=8)
        dets = detect_objects(img, house_palette)
        assert len(dets) == 1
        assert abs(dets[0].box.rotate - 45.0) < 4.0

    def test_merged_same_category_pair_splits(self, fine_palette):
        # Two overlapping laptops at fine scale merge into one component.
        scene = Scene(
            furniture=(
                OrientedBox("laptop", (-14.0, 0.0, 0.0), 36.0, 26.0, 3.0, 0.0),
                OrientedBox("laptop", (14.0, 0.0, 0.0), 36.0, 26.0, 3.0, 0.0),
            )
        )
        img = rasterize_layout(scene, fine_palette, canvas=(256, 256), margin=8)
        dets = detect_objects(img, fine_palette)
        assert len(dets) == 2

    def test_structural_included_on_request(self, house_palette, example_scene):
        img = rasterize_floorplan(example_scene, house_palette)
        dets = detect_objects(img, house_palette, include_structural=True)
        names = {d.category.name for d in dets}
        assert "door" in names and "window" in names
        assert "wall" not in names

    def test_json_round_trip(self, house_palette):
        scene = generate_toy_scene(5)
        img = rasterize_layout(scene, house_palette)
        dets = detect_objects(img, house_palette)
        boxes = detections_from_json(detections_to_json(dets), house_palette)
        assert len(boxes) == len(dets)
        for b, d in zip(boxes, dets):
            assert b.category == d.category.name
            assert b.pos == pytest.approx(d.box.pos, abs=1e-3)


class TestRoundTripCorpus:
    def test_small_corpus_precision_recall(self, house_palette):
        matched = 0
        total_truth = 0
        total_det = 0
        for seed in range(10):
            scene = generate_toy_scene(seed, ToyConfig(collision_mode="forbid"))
            img = rasterize_layout(scene, house_palette)
            dets = detect_objects(img, house_palette)
            total_truth += len(scene.furniture)
            total_det += len(dets)
            px = img.transform.scale
            used = set()
            for truth in scene.furniture:
                for i, d in enumerate(dets):
                    if i in used or d.category.name != truth.category:
                        continue
                    if (
                        abs(d.box.pos[0] - truth.pos[0]) * px <= 2.0
                        and abs(d.box.pos[1] - truth.pos[1]) * px <= 2.0
                        and abs(d.box.length - truth.length) * px <= 3.0
                        and abs(d.box.width - truth.width) * px <= 3.0
                        and d.box.rotate == truth.rotate
                    ):
                        used.add(i)
                        matched += 1
                        break
        assert matched / total_truth >= 0.98
        assert matched / total_det >= 0.98


class TestSegmentRooms:
    def test_scene_path_exact(self, example_scene, house_palette):
        masks = segment_rooms(example_scene, house_palette)
        assert len(masks) == 2
        assert np.array_equal(masks[0].polygon, example_scene.rooms[0].wall_points)
        assert masks[0].room_type == 1
        assert masks[1].room_name == "out_room"

    def test_single_rectangular_loop(self, house_palette):
        scene = generate_toy_scene(2, ToyConfig(room_count=(1, 1)))
        img = rasterize_floorplan(scene, house_palette)
        masks = segment_rooms(img, house_palette)
        assert len(masks) == 1
        room = scene.rooms[0]
        w_true = room.wall_points[:, 0].max() - room.wall_points[:, 0].min()
        poly = masks[0].polygon
        w_est = poly[:, 0].max() - poly[:, 0].min()
        # Interior is inset by the wall half-thickness on each side.
        assert w_est == pytest.approx(w_true - 24.0, abs=12.0)

    def test_broken_wall_becomes_exterior(self, house_palette):
        scene = generate_toy_scene(2, ToyConfig(room_count=(1, 1)))
        img = rasterize_floorplan(scene, house_palette)
        # Cut a 3-px slit through the bottom wall: region leaks to the border.
        pix = img.pixels.copy()
        room = scene.rooms[0]
        mid_x = (room.wall_points[:, 0].min() + room.wall_points[:, 0].max()) / 2
        px = img.transform.world_to_px(np.array([[mid_x, 0.0]]))[0]
        c = int(px[0])
        pix[:, c - 1 : c + 2, :] = 1.0
        broken = LayoutImage(pix, img.transform)
        assert segment_rooms(broken, house_palette) == []

    def test_two_rooms_found(self, house_palette):
        scene = generate_toy_scene(6, ToyConfig(room_count=(2, 2)))
        img = rasterize_floorplan(scene, house_palette)
        masks = segment_rooms(img, house_palette)
        assert len(masks) == 2

    def test_room_type_from_gray_fill(self, house_palette):
        from roomsynth.raster import rasterize_room_types

        scene = generate_toy_scene(3, ToyConfig(room_count=(1, 1)))
        img = rasterize_room_types(scene, house_palette)
        masks = segment_rooms(img, house_palette)
        assert len(masks) == 1
        assert masks[0].room_type == scene.rooms[0].room_type
