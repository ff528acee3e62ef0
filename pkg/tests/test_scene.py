import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomsynth import (
    OrientedBox,
    Room,
    Scene,
    SceneParseError,
    SceneSchemaError,
    SceneTypeError,
    ToyConfig,
    generate_toy_scene,
    parse_scene,
    serialize_scene,
    validate_scene,
)
from roomsynth.scene import scenes_close


class TestParse:
    def test_example_house(self, example_json_text):
        scene = parse_scene(example_json_text)
        assert len(scene.rooms) == 2
        assert len(scene.openings) == 2
        assert len(scene.furniture) == 2
        assert scene.rooms[0].room_name == "living"
        assert scene.rooms[1].room_type == 0
        table = scene.furniture[0]
        assert table.category == "coffee_table"
        assert table.pos == (569.91, 1844.75, 0.0)
        assert table.rotate == 180.0
        sofa = scene.furniture[1]
        assert sofa.rotate == 0.0
        assert sofa.length == 185.3
        door = scene.openings[0]
        assert door.kind == "door" and door.rotate == 100.0 and door.height == 210.0

    def test_empty_scene(self):
        scene = parse_scene('{"rooms":[],"windowsDoors":[],"furniture":[]}')
        assert scene == Scene()

    def test_missing_top_level_key(self):
        with pytest.raises(SceneSchemaError) as exc:
            parse_scene('{"rooms":[],"furniture":[]}')
        assert exc.value.key == "windowsDoors"

    def test_malformed_json_reports_offset(self):
        with pytest.raises(SceneParseError) as exc:
            parse_scene('{"rooms": [,]}')
        assert exc.value.offset is not None

    def test_non_numeric_coordinate_reports_path(self):
        doc = {
            "rooms": [{"roomId": "r", "roomName": "n", "roomType": 1, "wallPoints": [[0, 0], [1, "x"], [1, 1]]}],
            "windowsDoors": [],
            "furniture": [],
        }
        with pytest.raises(SceneTypeError) as exc:
            parse_scene(json.dumps(doc))
        assert "wallPoints[1][1]" in exc.value.path

    def test_missing_z_defaults_to_zero(self):
        doc = {
            "rooms": [],
            "windowsDoors": [],
            "furniture": [{"type": "bed", "pos": [5, 6], "length": 1, "width": 1, "height": 1, "rotate": 0}],
        }
        scene = parse_scene(json.dumps(doc))
        assert scene.furniture[0].pos == (5.0, 6.0, 0.0)

    def test_rotate_normalized(self):
        doc = {
            "rooms": [],
            "windowsDoors": [],
            "furniture": [
                {"type": "bed", "pos": [0, 0, 0], "length": 1, "width": 1, "height": 1, "rotate": 450},
                {"type": "bed", "pos": [0, 0, 0], "length": 1, "width": 1, "height": 1, "rotate": -90},
            ],
        }
        scene = parse_scene(json.dumps(doc))
        assert scene.furniture[0].rotate == 90.0
        assert scene.furniture[1].rotate == 270.0

    def test_unknown_opening_kind_rejected(self):
        doc = {
            "rooms": [],
            "windowsDoors": [{"type": "hatch", "pos": [0, 0, 0], "length": 1, "width": 1, "height": 1, "rotate": 0}],
            "furniture": [],
        }
        with pytest.raises(SceneTypeError):
            parse_scene(json.dumps(doc))

    def test_nan_rejected(self):
        text = '{"rooms":[],"windowsDoors":[],"furniture":[{"type":"bed","pos":[NaN,0,0],"length":1,"width":1,"height":1,"rotate":0}]}'
        with pytest.raises(SceneTypeError):
            parse_scene(text)

    def test_closing_duplicate_vertex_dropped(self):
        doc = {
            "rooms": [
                {"roomId": "r", "roomName": "n", "roomType": 1, "wallPoints": [[0, 0], [10, 0], [10, 10], [0, 0]]}
            ],
            "windowsDoors": [],
            "furniture": [],
        }
        scene = parse_scene(json.dumps(doc))
        assert len(scene.rooms[0].wall_points) == 3


class TestRoundTrip:
    def test_example_house(self, example_json_text):
        scene = parse_scene(example_json_text)
        again = parse_scene(serialize_scene(scene))
        assert scenes_close(scene, again, tol=1e-9)

    def test_empty(self):
        text = serialize_scene(Scene())
        doc = json.loads(text)
        assert doc == {"rooms": [], "windowsDoors": [], "furniture": []}

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_random_scenes(self, seed):
        scene = generate_toy_scene(seed, ToyConfig(collision_mode="force" if seed % 3 == 0 else "forbid"))
        again = parse_scene(serialize_scene(scene))
        assert scenes_close(scene, again, tol=1e-9)


class TestValidate:
    def test_example_house_is_clean(self, example_scene):
        report = validate_scene(example_scene)
        assert report.ok, str(report)

    def test_negative_length_flagged(self):
        doc = {
            "rooms": [],
            "windowsDoors": [],
            "furniture": [{"type": "bed", "pos": [0, 0, 0], "length": -1, "width": 1, "height": 1, "rotate": 0}],
        }
        report = validate_scene(parse_scene(json.dumps(doc)))
        assert "nonpositive_dimension" in report.codes()

    def test_far_away_furniture_flagged(self, example_scene):
        bed = OrientedBox("bed", (1e6, 1e6, 0.0), 200.0, 150.0, 50.0, 0.0)
        scene = Scene(example_scene.rooms, example_scene.openings, example_scene.furniture + (bed,))
        report = validate_scene(scene)
        assert "furniture_outside_rooms" in report.codes()

    def test_empty_room_flagged(self):
        room = Room("r0", "bedroom", 2, np.array([(0, 0), (400, 0), (400, 400), (0, 400)], float))
        report = validate_scene(Scene(rooms=(room,)))
        assert "empty_room" in report.codes()

    def test_unknown_category_flagged(self):
        room = Room("r0", "bedroom", 2, np.array([(0, 0), (400, 0), (400, 400), (0, 400)], float))
        item = OrientedBox("hovercraft", (200, 200, 0), 50, 50, 50, 0)
        report = validate_scene(Scene(rooms=(room,), furniture=(item,)))
        assert "unknown_category" in report.codes()

    def test_degenerate_room_flagged(self):
        room = Room("r0", "line", 1, np.array([(0, 0), (10, 0), (20, 0)], float))
        report = validate_scene(Scene(rooms=(room,)))
        assert "degenerate_room" in report.codes()
