"""Scenes: the JSON format, validation, and the synthetic generator.

Run:  python demos/01_scenes_and_validation.py
"""

import pathlib

from roomsynth import (
    ToyConfig,
    generate_toy_scene,
    parse_scene,
    scene_piou,
    scene_por,
    serialize_scene,
    validate_scene,
)

HERE = pathlib.Path(__file__).parent

# A scene is rooms (wall-point loops), windowsDoors, and furniture boxes,
# all in centimeters. This example ships with the test data.
scene = parse_scene((HERE.parent / "tests" / "data" / "house_example.json").read_text())
print(f"rooms: {[r.room_name for r in scene.rooms]}")
print(f"openings: {[o.kind for o in scene.openings]}")
for item in scene.furniture:
    print(f"  {item.category:14s} at ({item.pos[0]:7.1f}, {item.pos[1]:7.1f})  "
          f"{item.length:.0f} x {item.width:.0f} cm, rotated {item.rotate:.0f} deg")

# Validation collects problems instead of raising.
report = validate_scene(scene)
print("\nvalidation:", report)

# Round trip is lossless.
assert serialize_scene(parse_scene(serialize_scene(scene))) == serialize_scene(scene)

# The toy generator stands in for a real dataset. "forbid" mode rejects
# overlapping placements, so collision metrics are zero by construction.
clean = generate_toy_scene(seed=1, config=ToyConfig(collision_mode="forbid"))
print(f"\nforbid toy scene: {len(clean.furniture)} items, "
      f"POR={scene_por(clean):.3f}, PIoU={scene_piou(clean):.3f}")

# "force" mode plants one overlapping pair with footprint IoU >= 0.2.
colliding = generate_toy_scene(seed=1, config=ToyConfig(collision_mode="force"))
print(f"force  toy scene: {len(colliding.furniture)} items, "
      f"POR={scene_por(colliding):.3f}, PIoU={scene_piou(colliding):.3f}")
