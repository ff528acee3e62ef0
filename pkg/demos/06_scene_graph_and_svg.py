"""From boxes and rooms to a hierarchical scene graph, SVG, and JSON.

Covers: polygon straightening, door/window attachment, room assignment,
size-based asset retrieval, and both exports.

Run:  python demos/06_scene_graph_and_svg.py
"""

import pathlib

import numpy as np

from roomsynth import default_house_palette, load_scene
from roomsynth.perception import segment_rooms
from roomsynth.scenegraph import (
    build_scene_graph,
    export_graph_json,
    export_svg,
    make_demo_asset_database,
    retrieve_asset,
    straighten_polygon,
)

HERE = pathlib.Path(__file__).parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

palette = default_house_palette()
scene = load_scene(HERE.parent / "tests" / "data" / "house_example.json")

# Straightening snaps near-axis edges to exact horizontal/vertical.
wobbly = np.array([(0, 0), (400, 3), (398, 300), (-2, 298)], dtype=float)
print("straightened wobbly quadrilateral:")
print(straighten_polygon(wobbly))

# Asset retrieval: smallest squared footprint-size difference, per category.
db = make_demo_asset_database(palette.names(), sizes_per_category=5, seed=0)
sofa = scene.furniture[1]
match = retrieve_asset(sofa, db)
print(f"\nsofa {sofa.length:.0f}x{sofa.width:.0f} cm -> asset {match.asset_id} "
      f"({match.length:.0f}x{match.width:.0f} cm)")

# Full graph: rooms from the scene, openings attached, objects assigned.
masks = segment_rooms(scene, palette)
graph = build_scene_graph(list(scene.furniture), masks, list(scene.openings), db)
room = graph.house.rooms[0]
print(f"\ngraph: {len(graph.house.rooms)} interior room(s); boundary loop "
      f"{'present' if graph.house.boundary is not None else 'absent'}")
print(f"room '{room.name}': {len(room.objects)} objects, {len(room.openings)} openings attached")
for obj in room.objects:
    print(f"  {obj.box.category:14s} -> {obj.asset.asset_id}")

(OUT / "house_graph.json").write_text(export_graph_json(graph))
(OUT / "house.svg").write_text(export_svg(graph, palette))
print(f"\nwrote {OUT/'house_graph.json'} and {OUT/'house.svg'}")
