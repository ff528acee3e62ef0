"""Hierarchical scene graph assembly and export.

House -> Room -> Object -> fine-grained child. Room polygons are straightened
(near-axis edges snapped to exact horizontal/vertical), doors and windows are
projected onto the nearest wall segment, objects land in the room containing
their footprint centroid, and each object gets the size-closest asset of its
category from a user-supplied database. Exports: top-down SVG and a lossless
JSON form of the hierarchy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .palette import FINE_PARENT_CATEGORIES, Palette, canonical_name
from .perception import Detection, RoomMask
from .scene import Opening, OrientedBox

DEFAULT_ANGLE_TOL_DEG = 5.0
DEFAULT_SNAP_TOL_CM = 6.0
DEFAULT_ATTACH_DIST_CM = 30.0
OVERHANG_FRACTION = 0.15
OUT_ROOM_TYPE = 0


# --- polygon straightening ---


def _merge_close_vertices(pts: np.ndarray, tol: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in pts:
        if out and np.hypot(*(p - out[-1])) <= tol:
            out[-1] = (out[-1] + p) / 2.0
        else:
            out.append(p.copy())
    while len(out) >= 2 and np.hypot(*(out[0] - out[-1])) <= tol:
        out[0] = (out[0] + out.pop()) / 2.0
    return np.array(out)


def _classify_edge(d: np.ndarray, angle_tol: float, snap_tol: float) -> str:
    adx, ady = abs(d[0]), abs(d[1])
    t = math.tan(math.radians(angle_tol))
    if ady <= adx and (ady <= t * adx or ady <= snap_tol):
        return "H"
    if adx < ady and (adx <= t * ady or adx <= snap_tol):
        return "V"
    return "free"


def _straighten_once(pts: np.ndarray, angle_tol: float, snap_tol: float) -> np.ndarray:
    pts = _merge_close_vertices(pts, snap_tol)
    n = len(pts)
    if n < 3:
        return pts
    classes = [_classify_edge(pts[(i + 1) % n] - pts[i], angle_tol, snap_tol) for i in range(n)]

    # Runs of consecutive same-class edges share one snapped level.
    runs: list[dict] = []
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        cls = classes[i]
        w = abs(b[0] - a[0]) if cls == "H" else abs(b[1] - a[1]) if cls == "V" else 0.0
        lvl = (a[1] + b[1]) / 2.0 if cls == "H" else (a[0] + b[0]) / 2.0 if cls == "V" else 0.0
        if runs and runs[-1]["cls"] == cls != "free":
            r = runs[-1]
            tw = r["w"] + w
            r["lvl"] = (r["lvl"] * r["w"] + lvl * w) / tw if tw > 0 else r["lvl"]
            r["w"] = tw
            r["edges"].append(i)
        else:
            runs.append({"cls": cls, "lvl": lvl, "w": max(w, 1e-12), "edges": [i]})
    # The list is circular: first and last run may be the same run.
    if len(runs) >= 2 and runs[0]["cls"] == runs[-1]["cls"] != "free":
        first, last = runs[0], runs.pop()
        tw = first["w"] + last["w"]
        first["lvl"] = (first["lvl"] * first["w"] + last["lvl"] * last["w"]) / tw
        first["w"] = tw
        first["edges"] = last["edges"] + first["edges"]
    # Merge adjacent same-class runs whose levels nearly agree (a perpendicular
    # jog collapsed during vertex merging).
    merged: list[dict] = []
    for r in runs:
        if merged and merged[-1]["cls"] == r["cls"] != "free" and abs(merged[-1]["lvl"] - r["lvl"]) <= snap_tol:
            m = merged[-1]
            tw = m["w"] + r["w"]
            m["lvl"] = (m["lvl"] * m["w"] + r["lvl"] * r["w"]) / tw
            m["w"] = tw
            m["edges"] += r["edges"]
        else:
            merged.append(r)
    runs = merged
    if len(runs) == 1:
        return pts

    out: list[tuple[float, float]] = []
    m = len(runs)
    for k in range(m):
        prev, cur = runs[k - 1], runs[k]
        # Original vertex where the previous run's last edge meets this run.
        v = pts[cur["edges"][0]]
        pc, cc = prev["cls"], cur["cls"]
        if pc == "H" and cc == "V":
            out.append((cur["lvl"], prev["lvl"]))
        elif pc == "V" and cc == "H":
            out.append((prev["lvl"], cur["lvl"]))
        elif pc == "free" and cc == "H":
            out.append((v[0], cur["lvl"]))
        elif pc == "free" and cc == "V":
            out.append((cur["lvl"], v[1]))
        elif pc == "H" and cc == "free":
            out.append((v[0], prev["lvl"]))
        elif pc == "V" and cc == "free":
            out.append((prev["lvl"], v[1]))
        elif pc == cc == "free":
            out.append(tuple(v))
        elif pc == "H" and cc == "H":
            out.append((v[0], prev["lvl"]))
            out.append((v[0], cur["lvl"]))
        elif pc == "V" and cc == "V":
            out.append((prev["lvl"], v[1]))
            out.append((cur["lvl"], v[1]))
        # Free-run interior vertices pass through untouched; endpoints were
        # handled above.
        if cc == "free" and len(cur["edges"]) > 1:
            for e in cur["edges"][1:]:
                out.append(tuple(pts[e]))

    arr = np.array(out)
    # Drop exactly-duplicate consecutive vertices, then merge collinear edges.
    keep = [0]
    for i in range(1, len(arr)):
        if not np.allclose(arr[i], arr[keep[-1]], atol=1e-9):
            keep.append(i)
    if len(keep) > 1 and np.allclose(arr[keep[0]], arr[keep[-1]], atol=1e-9):
        keep.pop()
    arr = arr[keep]
    n2 = len(arr)
    final = []
    for i in range(n2):
        prev_d = arr[i] - arr[i - 1]
        next_d = arr[(i + 1) % n2] - arr[i]
        if abs(prev_d[0] * next_d[1] - prev_d[1] * next_d[0]) > 1e-9:
            final.append(arr[i])
    return np.array(final) if len(final) >= 3 else arr


def straighten_polygon(
    points: np.ndarray,
    angle_tol: float = DEFAULT_ANGLE_TOL_DEG,
    snap_tol: float = DEFAULT_SNAP_TOL_CM,
    return_flags: bool = False,
):
    """Snap near-axis edges of a closed loop to exact horizontal/vertical.

    Runs to a fixpoint, so applying the operation twice equals applying it
    once. If the snapped loop would self-intersect or degenerate the original
    loop comes back with a warning flag.
    """
    original = np.asarray(points, dtype=float)
    flags: list[str] = []
    cur = original
    for _ in range(5):
        if len(cur) < 3:
            break
        nxt = _straighten_once(cur, angle_tol, snap_tol)
        # Keep the reached fixpoint object itself: re-running on it converges
        # to it again bitwise, which makes the operation exactly idempotent.
        if len(nxt) == len(cur) and np.allclose(nxt, cur, atol=1e-9):
            break
        cur = nxt
    ok = len(cur) >= 3 and abs(geometry.polygon_area(cur)) > 1e-9 and geometry.polygon_is_simple(cur)
    if not ok:
        flags.append("straighten_failed")
        cur = original
    return (cur, flags) if return_flags else cur


# --- opening attachment ---


@dataclass
class AttachedOpening:
    opening: Opening
    attached: bool
    room_index: int | None = None
    wall_index: int | None = None
    position: tuple[float, float] | None = None  # projected center, cm
    rotation: float | None = None  # wall direction, degrees in [0, 180)
    distance: float = math.inf

    def effective_opening(self) -> Opening:
        if not self.attached:
            return self.opening
        o = self.opening
        return Opening(o.kind, (self.position[0], self.position[1], o.pos[2]), o.length, o.width, o.height, self.rotation)


def attach_openings(
    openings,
    room_polygons: list[np.ndarray],
    max_dist: float = DEFAULT_ATTACH_DIST_CM,
) -> list[AttachedOpening]:
    """Project each opening onto the nearest wall segment within ``max_dist``.

    An attached opening's rotation is the wall direction; out-of-range
    openings come back flagged, never dropped.
    """
    results = []
    for opening in openings:
        p = (opening.pos[0], opening.pos[1])
        best = AttachedOpening(opening, attached=False)
        for ri, poly in enumerate(room_polygons):
            n = len(poly)
            for wi in range(n):
                a, b = poly[wi], poly[(wi + 1) % n]
                q, d = geometry.project_point_to_segment(p, tuple(a), tuple(b))
                if d < best.distance:
                    angle = math.degrees(math.atan2(b[1] - a[1], b[0] - a[0])) % 180.0
                    best = AttachedOpening(opening, True, ri, wi, q, angle, d)
        if best.distance > max_dist:
            best = AttachedOpening(opening, attached=False, distance=best.distance)
        results.append(best)
    return results


# --- room assignment ---


def assign_to_rooms(objects: list[OrientedBox], room_polygons: list[np.ndarray]) -> list[int | None]:
    """Room index per object (footprint centroid, even-odd rule) or None.

    A centroid inside several rooms (shared boundary) goes to the room with
    the larger footprint-intersection area; remaining ties to the lower index.
    """
    out: list[int | None] = []
    for obj in objects:
        cx, cy = obj.pos[0], obj.pos[1]
        hits = [ri for ri, poly in enumerate(room_polygons) if geometry.point_in_polygon(cx, cy, poly)]
        if not hits:
            out.append(None)
        elif len(hits) == 1:
            out.append(hits[0])
        else:
            quad = obj.footprint()
            areas = []
            for ri in hits:
                clipped = geometry.convex_clip(room_polygons[ri], quad)
                areas.append(abs(geometry.polygon_area(clipped)) if len(clipped) >= 3 else 0.0)
            out.append(hits[int(np.argmax(areas))])
    return out


# --- asset retrieval ---


class AssetError(Exception):
    pass


@dataclass(frozen=True)
class AssetRef:
    asset_id: str
    category: str
    length: float
    width: float
    height: float

    def to_dict(self) -> dict:
        return {
            "id": self.asset_id,
            "category": self.category,
            "length": self.length,
            "width": self.width,
            "height": self.height,
        }


class AssetDatabase:
    def __init__(self, entries: list[AssetRef]):
        seen = set()
        self.by_category: dict[str, list[AssetRef]] = {}
        for e in entries:
            if e.asset_id in seen:
                raise AssetError(f"duplicate asset id '{e.asset_id}'")
            if min(e.length, e.width, e.height) <= 0:
                raise AssetError(f"asset '{e.asset_id}' has non-positive dimensions")
            seen.add(e.asset_id)
            self.by_category.setdefault(canonical_name(e.category), []).append(e)
        self.entries = list(entries)

    def __len__(self) -> int:
        return len(self.entries)

    @staticmethod
    def from_json(text: str) -> "AssetDatabase":
        return AssetDatabase(
            [
                AssetRef(str(r["id"]), canonical_name(r["category"]), float(r["length"]), float(r["width"]), float(r["height"]))
                for r in json.loads(text)
            ]
        )

    def to_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.entries], indent=2)

    @staticmethod
    def load(path) -> "AssetDatabase":
        with open(path, "r", encoding="utf-8") as fh:
            return AssetDatabase.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def retrieve_asset(obj: OrientedBox, db: AssetDatabase) -> AssetRef | None:
    """Category-matching asset with the smallest squared footprint-size gap;
    ties break to the lexicographically smallest id. None when the category
    has no assets."""
    candidates = db.by_category.get(canonical_name(obj.category))
    if not candidates:
        return None
    best = None
    best_key = None
    for e in candidates:
        cost = (obj.length - e.length) ** 2 + (obj.width - e.width) ** 2
        key = (cost, e.asset_id)
        if best_key is None or key < best_key:
            best, best_key = e, key
    return best


def make_demo_asset_database(categories, sizes_per_category: int = 6, seed: int = 0) -> AssetDatabase:
    """Synthetic asset inventory spanning common furniture sizes."""
    rng = np.random.default_rng(seed)
    entries = []
    for cat in sorted(canonical_name(c) for c in categories):
        for k in range(sizes_per_category):
            length = float(np.round(rng.uniform(40, 260), 1))
            width = float(np.round(rng.uniform(40, 200), 1))
            height = float(np.round(rng.uniform(30, 210), 1))
            entries.append(AssetRef(f"{cat}-{k:03d}", cat, length, width, height))
    return AssetDatabase(entries)


# --- graph nodes ---


@dataclass
class ObjectNode:
    box: OrientedBox
    asset: AssetRef | None = None
    no_match: bool = False
    confidence: float | None = None
    orientation_confidence: float | None = None
    children: list["ObjectNode"] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


@dataclass
class OpeningNode:
    kind: str
    original: Opening
    attached: bool
    wall_index: int | None = None
    position: tuple[float, float] | None = None
    rotation: float | None = None
    distance: float | None = None


@dataclass
class RoomNode:
    name: str
    room_type: int | None
    polygon: np.ndarray
    objects: list[ObjectNode] = field(default_factory=list)
    openings: list[OpeningNode] = field(default_factory=list)
    materials: dict | None = None
    flags: list[str] = field(default_factory=list)


@dataclass
class HouseNode:
    rooms: list[RoomNode] = field(default_factory=list)
    unassigned: list[ObjectNode] = field(default_factory=list)
    boundary: np.ndarray | None = None
    unattached_openings: list[OpeningNode] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


@dataclass
class SceneGraph:
    house: HouseNode

    def all_objects(self) -> list[ObjectNode]:
        out = list(self.house.unassigned)
        for room in self.house.rooms:
            out.extend(room.objects)
        return out

    def object_count(self) -> int:
        return len(self.all_objects())


def _is_interior(mask: RoomMask) -> bool:
    if canonical_name(mask.room_name or "") == "out_room":
        return False
    return mask.room_type != OUT_ROOM_TYPE


def build_scene_graph(
    detections,
    room_masks: list[RoomMask],
    openings,
    db: AssetDatabase | None = None,
    angle_tol: float = DEFAULT_ANGLE_TOL_DEG,
    snap_tol: float = DEFAULT_SNAP_TOL_CM,
    max_attach_dist: float = DEFAULT_ATTACH_DIST_CM,
    straighten: bool = True,
) -> SceneGraph:
    """Assemble the hierarchy; anomalies become node flags, nothing raises.

    ``detections`` may be Detection objects or bare OrientedBox records. Rooms
    with type 0 (the house outline, "out_room") become the house boundary, not
    interior rooms.
    """
    house = HouseNode()

    interior: list[RoomMask] = []
    for mask in room_masks:
        if _is_interior(mask):
            interior.append(mask)
        elif house.boundary is None:
            house.boundary = np.asarray(mask.polygon, dtype=float)
        else:
            house.flags.append(f"extra_boundary_room:{mask.room_name}")

    polygons = []
    for mask in interior:
        poly = np.asarray(mask.polygon, dtype=float)
        room_flags: list[str] = []
        if straighten:
            poly, room_flags = straighten_polygon(poly, angle_tol, snap_tol, return_flags=True)
        node = RoomNode(name=mask.room_name or "room", room_type=mask.room_type, polygon=poly, flags=room_flags)
        house.rooms.append(node)
        polygons.append(poly)

    for att in attach_openings(openings, polygons, max_attach_dist):
        node = OpeningNode(
            kind=att.opening.kind,
            original=att.opening,
            attached=att.attached,
            wall_index=att.wall_index,
            position=att.position,
            rotation=att.rotation,
            distance=None if math.isinf(att.distance) else att.distance,
        )
        if att.attached:
            house.rooms[att.room_index].openings.append(node)
        else:
            house.unattached_openings.append(node)

    objects: list[ObjectNode] = []
    for det in detections:
        if isinstance(det, Detection):
            node = ObjectNode(
                box=det.box,
                confidence=det.confidence,
                orientation_confidence=det.orientation_confidence,
            )
        else:
            node = ObjectNode(box=det)
        objects.append(node)

    for node, room_idx in zip(objects, assign_to_rooms([n.box for n in objects], polygons)):
        if db is not None:
            node.asset = retrieve_asset(node.box, db)
            node.no_match = node.asset is None
            if node.no_match:
                node.flags.append("no_asset_match")
        if room_idx is None:
            node.flags.append("outside_all_rooms")
            house.unassigned.append(node)
        else:
            house.rooms[room_idx].objects.append(node)

    return SceneGraph(house)


# --- fine-grained generation ---


def fine_grained_generate(
    parent,
    denoiser,
    fine_palette: Palette,
    schedule,
    rng: np.random.Generator,
    canvas: tuple[int, int] = (64, 64),
    overhang_fraction: float = OVERHANG_FRACTION,
    min_area_px: int = 9,
) -> list[ObjectNode]:
    """One autoregressive refinement level: condition on the parent boundary,
    sample a fine layout, decode children into parent-local coordinates.

    Children sit at z = parent height. A child poking past the parent edge by
    at most ``overhang_fraction`` of its own depth is kept and flagged as a
    natural overhang; anything further out is discarded. When ``parent`` is an
    ObjectNode the children are also attached to it.
    """
    from .raster import rasterize_parent_boundary
    from .diffusion.sampling import sample
    from .perception import detect_objects

    node = parent if isinstance(parent, ObjectNode) else None
    box = parent.box if node is not None else parent
    if canonical_name(box.category) not in FINE_PARENT_CATEGORIES:
        raise AssetError(f"category '{box.category}' does not host fine-grained layouts")

    cond = rasterize_parent_boundary(box, fine_palette, canvas)
    layout = sample(denoiser, cond, schedule, rng)
    detections = detect_objects(layout, fine_palette, transform=cond.transform, min_area=min_area_px)

    r = math.radians(box.rotate)
    c, s = math.cos(r), math.sin(r)
    children: list[ObjectNode] = []
    dropped = 0
    for det in detections:
        if canonical_name(det.category.name) == canonical_name(box.category):
            continue  # echo of the parent boundary, not a child
        corners = det.box.footprint()
        dx = corners[:, 0] - box.pos[0]
        dy = corners[:, 1] - box.pos[1]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        over_x = float(np.max(np.abs(lx))) - box.length / 2.0
        over_y = float(np.max(np.abs(ly))) - box.width / 2.0
        overhang = max(over_x, over_y, 0.0)
        depth = min(det.box.length, det.box.width)
        if overhang > overhang_fraction * max(depth, 1e-9):
            dropped += 1
            continue
        child_box = OrientedBox(
            det.box.category,
            (det.box.pos[0] - box.pos[0], det.box.pos[1] - box.pos[1], box.height),
            det.box.length,
            det.box.width,
            det.box.height,
            det.box.rotate,
        )
        child = ObjectNode(
            box=child_box,
            confidence=det.confidence,
            orientation_confidence=det.orientation_confidence,
        )
        if overhang > 0.0:
            child.flags.append("natural_overhang")
        children.append(child)

    if node is not None:
        node.children = children
        if dropped:
            node.flags.append(f"dropped_children:{dropped}")
    return children


# --- exports ---


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def export_svg(graph: SceneGraph, palette: Palette, wall_thickness_cm: float = 24.0, margin: float = 40.0) -> str:
    """Deterministic top-down SVG render of the hierarchy."""
    pts = []
    if graph.house.boundary is not None:
        pts.append(graph.house.boundary)
    for room in graph.house.rooms:
        pts.append(room.polygon)
    for obj in graph.all_objects():
        pts.append(obj.box.footprint())
    if pts:
        allp = np.vstack(pts)
        xmin, ymin = allp.min(axis=0) - margin
        xmax, ymax = allp.max(axis=0) + margin
    else:
        xmin = ymin = 0.0
        xmax = ymax = 100.0

    def pt(x, y):
        # Flip y so world +y points up on screen.
        return f"{_fmt(x - xmin)},{_fmt(ymax - y)}"

    def poly_points(poly):
        return " ".join(pt(x, y) for x, y in poly)

    w, h = xmax - xmin, ymax - ymin
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {_fmt(w)} {_fmt(h)}" '
        f'width="{_fmt(w)}" height="{_fmt(h)}">',
        f'<rect x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}" fill="#FFFFFF"/>',
    ]
    if graph.house.boundary is not None:
        lines.append(
            f'<polygon points="{poly_points(graph.house.boundary)}" fill="none" '
            f'stroke="#888888" stroke-width="{_fmt(wall_thickness_cm / 2)}"/>'
        )
    for room in graph.house.rooms:
        lines.append(f'<g class="room" data-name="{room.name}">')
        lines.append(
            f'<polygon points="{poly_points(room.polygon)}" fill="#F4F4F4" '
            f'stroke="#000000" stroke-width="{_fmt(wall_thickness_cm)}"/>'
        )
        for opening in room.openings:
            o = opening.original
            x, y = opening.position if opening.attached else (o.pos[0], o.pos[1])
            rot = opening.rotation if opening.attached else o.rotate
            color = "#139C5A" if o.kind == "door" else "#0000FF"
            cxs, cys = pt(x, y).split(",")
            lines.append(
                f'<rect class="{o.kind}" x="{_fmt(float(cxs) - o.length / 2)}" y="{_fmt(float(cys) - o.width / 2)}" '
                f'width="{_fmt(o.length)}" height="{_fmt(o.width)}" fill="{color}" '
                f'transform="rotate({_fmt(-rot)} {cxs} {cys})"/>'
            )
        for obj in room.objects:
            lines.extend(_svg_object(obj, palette, pt))
        lines.append("</g>")
    for obj in graph.house.unassigned:
        lines.extend(_svg_object(obj, palette, pt, extra_class=" unassigned"))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _svg_object(obj: ObjectNode, palette: Palette, pt, extra_class: str = "") -> list[str]:
    from .palette import rgb_to_hex

    box = obj.box
    entry = palette.get(box.category)
    color = "#" + (rgb_to_hex(entry.color) if entry else "999999")
    alpha = entry.alpha if entry else 0.3
    cxs, cys = pt(box.pos[0], box.pos[1]).split(",")
    out = [
        f'<g class="object{extra_class}" data-category="{box.category}">',
        f'<rect x="{_fmt(float(cxs) - box.length / 2)}" y="{_fmt(float(cys) - box.width / 2)}" '
        f'width="{_fmt(box.length)}" height="{_fmt(box.width)}" fill="{color}" fill-opacity="{alpha}" '
        f'stroke="{color}" stroke-width="2" transform="rotate({_fmt(-box.rotate)} {cxs} {cys})"/>',
        f'<text x="{cxs}" y="{cys}" font-size="20" text-anchor="middle" fill="#333333">{box.category}</text>',
    ]
    for child in obj.children:
        world_child = OrientedBox(
            child.box.category,
            (box.pos[0] + child.box.pos[0], box.pos[1] + child.box.pos[1], child.box.pos[2]),
            child.box.length,
            child.box.width,
            child.box.height,
            child.box.rotate,
        )
        out.extend(_svg_object(ObjectNode(box=world_child, children=child.children), palette, pt, extra_class=" fine"))
    out.append("</g>")
    return out


def _box_to_dict(box: OrientedBox) -> dict:
    return {
        "type": box.category,
        "pos": [float(v) for v in box.pos],
        "length": float(box.length),
        "width": float(box.width),
        "height": float(box.height),
        "rotate": float(box.rotate),
    }


def _box_from_dict(d: dict) -> OrientedBox:
    return OrientedBox(d["type"], tuple(float(v) for v in d["pos"]), d["length"], d["width"], d["height"], d["rotate"])


def _object_to_dict(node: ObjectNode) -> dict:
    out = _box_to_dict(node.box)
    out["asset"] = node.asset.to_dict() if node.asset else None
    if node.no_match:
        out["no_match"] = True
    if node.confidence is not None:
        out["confidence"] = node.confidence
    if node.orientation_confidence is not None:
        out["orientation_confidence"] = node.orientation_confidence
    if node.children:
        out["children"] = [_object_to_dict(c) for c in node.children]
    if node.flags:
        out["flags"] = list(node.flags)
    return out


def _object_from_dict(d: dict) -> ObjectNode:
    return ObjectNode(
        box=_box_from_dict(d),
        asset=AssetRef(d["asset"]["id"], d["asset"]["category"], d["asset"]["length"], d["asset"]["width"], d["asset"]["height"]) if d.get("asset") else None,
        no_match=bool(d.get("no_match", False)),
        confidence=d.get("confidence"),
        orientation_confidence=d.get("orientation_confidence"),
        children=[_object_from_dict(c) for c in d.get("children", [])],
        flags=list(d.get("flags", [])),
    )


def _opening_to_dict(node: OpeningNode) -> dict:
    o = node.original
    out = {
        "type": o.kind,
        "pos": [float(v) for v in o.pos],
        "length": float(o.length),
        "width": float(o.width),
        "height": float(o.height),
        "rotate": float(o.rotate),
        "attached": node.attached,
    }
    if node.attached:
        out["wall_index"] = node.wall_index
        out["position"] = [float(node.position[0]), float(node.position[1])]
        out["rotation"] = float(node.rotation)
        out["distance"] = float(node.distance)
    return out


def _opening_from_dict(d: dict) -> OpeningNode:
    original = Opening(d["type"], tuple(float(v) for v in d["pos"]), d["length"], d["width"], d["height"], d["rotate"])
    return OpeningNode(
        kind=d["type"],
        original=original,
        attached=bool(d["attached"]),
        wall_index=d.get("wall_index"),
        position=tuple(d["position"]) if d.get("position") else None,
        rotation=d.get("rotation"),
        distance=d.get("distance"),
    )


def export_graph_json(graph: SceneGraph) -> str:
    house: dict = {
        "rooms": [
            {
                "name": room.name,
                "roomType": room.room_type,
                "polygon": [[float(x), float(y)] for x, y in room.polygon],
                "openings": [_opening_to_dict(o) for o in room.openings],
                "objects": [_object_to_dict(o) for o in room.objects],
                **({"materials": room.materials} if room.materials else {}),
                **({"flags": list(room.flags)} if room.flags else {}),
            }
            for room in graph.house.rooms
        ],
        "unassigned": [_object_to_dict(o) for o in graph.house.unassigned],
    }
    if graph.house.boundary is not None:
        house["boundary"] = [[float(x), float(y)] for x, y in graph.house.boundary]
    if graph.house.unattached_openings:
        house["unattached_openings"] = [_opening_to_dict(o) for o in graph.house.unattached_openings]
    if graph.house.flags:
        house["flags"] = list(graph.house.flags)
    return json.dumps({"house": house}, indent=2)


def load_graph_json(text: str) -> SceneGraph:
    doc = json.loads(text)["house"]
    house = HouseNode()
    for r in doc.get("rooms", []):
        room = RoomNode(
            name=r["name"],
            room_type=r.get("roomType"),
            polygon=np.array(r["polygon"], dtype=float).reshape(-1, 2),
            materials=r.get("materials"),
            flags=list(r.get("flags", [])),
        )
        room.openings = [_opening_from_dict(o) for o in r.get("openings", [])]
        room.objects = [_object_from_dict(o) for o in r.get("objects", [])]
        house.rooms.append(room)
    house.unassigned = [_object_from_dict(o) for o in doc.get("unassigned", [])]
    if "boundary" in doc:
        house.boundary = np.array(doc["boundary"], dtype=float).reshape(-1, 2)
    house.unattached_openings = [_opening_from_dict(o) for o in doc.get("unattached_openings", [])]
    house.flags = list(doc.get("flags", []))
    return SceneGraph(house)
