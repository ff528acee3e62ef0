"""Scene data model and its JSON wire format.

A scene is a set of rooms (closed wall-point loops), openings (doors and
windows), and furniture (oriented boxes). All lengths are centimeters; angles
are degrees counterclockwise about the vertical axis. The JSON layout uses
top-level keys ``rooms``, ``windowsDoors``, and ``furniture``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry


class SceneError(Exception):
    """Base class for scene parsing/validation failures."""


class SceneParseError(SceneError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class SceneSchemaError(SceneError):
    def __init__(self, key: str, path: str = "$"):
        super().__init__(f"missing required key '{key}' at {path}")
        self.key = key
        self.path = path


class SceneTypeError(SceneError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{message} at {path}")
        self.path = path


@dataclass(frozen=True)
class Room:
    room_id: str
    room_name: str
    room_type: int
    wall_points: np.ndarray  # (N, 2) cm; loop closes implicitly

    def polygon(self) -> np.ndarray:
        return self.wall_points


@dataclass(frozen=True)
class Opening:
    kind: str  # "door" | "window"
    pos: tuple[float, float, float]  # x, y center; z = height above floor
    length: float
    width: float
    height: float
    rotate: float

    def footprint(self) -> np.ndarray:
        return geometry.box_corners(self.pos[0], self.pos[1], self.length, self.width, self.rotate)


@dataclass(frozen=True)
class OrientedBox:
    category: str
    pos: tuple[float, float, float]
    length: float
    width: float
    height: float
    rotate: float  # degrees CCW about z through pos

    def footprint(self) -> np.ndarray:
        return geometry.box_corners(self.pos[0], self.pos[1], self.length, self.width, self.rotate)

    def footprint_area(self) -> float:
        return self.length * self.width


@dataclass(frozen=True)
class Scene:
    rooms: tuple[Room, ...] = ()
    openings: tuple[Opening, ...] = ()
    furniture: tuple[OrientedBox, ...] = ()

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) over rooms, openings, and furniture."""
        pts = []
        for room in self.rooms:
            pts.append(room.wall_points)
        for op in self.openings:
            pts.append(op.footprint())
        for f in self.furniture:
            pts.append(f.footprint())
        if not pts:
            raise ValueError("empty scene has no bounding box")
        allp = np.vstack(pts)
        return (
            float(allp[:, 0].min()),
            float(allp[:, 1].min()),
            float(allp[:, 0].max()),
            float(allp[:, 1].max()),
        )

    def without_furniture(self) -> "Scene":
        return replace(self, furniture=())


OPENING_KINDS = ("door", "window")


def _normalize_rotate(angle: float) -> float:
    return float(angle) % 360.0


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SceneSchemaError(key, path)
    return obj[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneTypeError(f"expected a number, got {type(value).__name__}", path)
    v = float(value)
    if not math.isfinite(v):
        raise SceneTypeError("expected a finite number", path)
    return v


def _parse_pos(raw, path: str) -> tuple[float, float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) not in (2, 3):
        raise SceneTypeError("expected [x, y] or [x, y, z]", path)
    x = _as_number(raw[0], f"{path}[0]")
    y = _as_number(raw[1], f"{path}[1]")
    z = _as_number(raw[2], f"{path}[2]") if len(raw) == 3 else 0.0
    return (x, y, z)


def _parse_wall_points(raw, path: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise SceneTypeError("expected a list of 2D points", path)
    pts = []
    for i, p in enumerate(raw):
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise SceneTypeError("expected a 2D point", f"{path}[{i}]")
        pts.append((_as_number(p[0], f"{path}[{i}][0]"), _as_number(p[1], f"{path}[{i}][1]")))
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    # A duplicated closing vertex is redundant; the loop closes implicitly.
    if len(arr) >= 2 and np.array_equal(arr[0], arr[-1]):
        arr = arr[:-1]
    return arr


def _parse_box_record(obj: dict, path: str) -> tuple[tuple[float, float, float], float, float, float, float]:
    pos = _parse_pos(_require(obj, "pos", path), f"{path}.pos")
    length = _as_number(_require(obj, "length", path), f"{path}.length")
    width = _as_number(_require(obj, "width", path), f"{path}.width")
    height = _as_number(_require(obj, "height", path), f"{path}.height")
    rotate = _normalize_rotate(_as_number(_require(obj, "rotate", path), f"{path}.rotate"))
    return pos, length, width, height, rotate


def parse_scene(text: str | bytes) -> Scene:
    """Parse scene JSON. Unknown furniture categories are preserved verbatim."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SceneParseError(f"input is not UTF-8: {e.reason}", e.start) from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneParseError(f"malformed JSON: {e.msg}", e.pos) from e
    if not isinstance(doc, dict):
        raise SceneTypeError("expected a JSON object", "$")

    rooms_raw = _require(doc, "rooms", "$")
    openings_raw = _require(doc, "windowsDoors", "$")
    furniture_raw = _require(doc, "furniture", "$")

    rooms = []
    for i, r in enumerate(rooms_raw):
        path = f"$.rooms[{i}]"
        rooms.append(
            Room(
                room_id=str(_require(r, "roomId", path)),
                room_name=str(_require(r, "roomName", path)),
                room_type=int(_as_number(_require(r, "roomType", path), f"{path}.roomType")),
                wall_points=_parse_wall_points(_require(r, "wallPoints", path), f"{path}.wallPoints"),
            )
        )

    openings = []
    for i, o in enumerate(openings_raw):
        path = f"$.windowsDoors[{i}]"
        kind = str(_require(o, "type", path))
        if kind not in OPENING_KINDS:
            raise SceneTypeError(f"opening type must be one of {OPENING_KINDS}, got '{kind}'", f"{path}.type")
        pos, length, width, height, rotate = _parse_box_record(o, path)
        openings.append(Opening(kind, pos, length, width, height, rotate))

    furniture = []
    for i, f in enumerate(furniture_raw):
        path = f"$.furniture[{i}]"
        category = str(_require(f, "type", path))
        pos, length, width, height, rotate = _parse_box_record(f, path)
        furniture.append(OrientedBox(category, pos, length, width, height, rotate))

    return Scene(tuple(rooms), tuple(openings), tuple(furniture))


def serialize_scene(scene: Scene, indent: int | None = 2) -> str:
    """Inverse of :func:`parse_scene`; floats survive the round trip exactly."""
    doc = {
        "rooms": [
            {
                "roomId": r.room_id,
                "roomName": r.room_name,
                "roomType": r.room_type,
                "wallPoints": [[float(x), float(y)] for x, y in r.wall_points],
            }
            for r in scene.rooms
        ],
        "windowsDoors": [
            {
                "type": o.kind,
                "pos": [float(v) for v in o.pos],
                "length": float(o.length),
                "width": float(o.width),
                "height": float(o.height),
                "rotate": float(o.rotate),
            }
            for o in scene.openings
        ],
        "furniture": [
            {
                "type": f.category,
                "pos": [float(v) for v in f.pos],
                "length": float(f.length),
                "width": float(f.width),
                "height": float(f.height),
                "rotate": float(f.rotate),
            }
            for f in scene.furniture
        ],
    }
    return json.dumps(doc, indent=indent)


def load_scene(path) -> Scene:
    with open(path, "rb") as fh:
        return parse_scene(fh.read())


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_scene(scene))


def scenes_close(a: Scene, b: Scene, tol: float = 1e-9) -> bool:
    """Structural equality with per-float tolerance."""
    if len(a.rooms) != len(b.rooms) or len(a.openings) != len(b.openings) or len(a.furniture) != len(b.furniture):
        return False
    for ra, rb in zip(a.rooms, b.rooms):
        if (ra.room_id, ra.room_name, ra.room_type) != (rb.room_id, rb.room_name, rb.room_type):
            return False
        if ra.wall_points.shape != rb.wall_points.shape:
            return False
        if not np.allclose(ra.wall_points, rb.wall_points, rtol=0.0, atol=tol):
            return False
    for oa, ob in zip(a.openings, b.openings):
        if oa.kind != ob.kind:
            return False
        if not _box_fields_close(oa, ob, tol):
            return False
    for fa, fb in zip(a.furniture, b.furniture):
        if fa.category != fb.category:
            return False
        if not _box_fields_close(fa, fb, tol):
            return False
    return True


def _box_fields_close(a, b, tol: float) -> bool:
    va = np.array([*a.pos, a.length, a.width, a.height, a.rotate])
    vb = np.array([*b.pos, b.length, b.width, b.height, b.rotate])
    return bool(np.allclose(va, vb, rtol=0.0, atol=tol))


# --- validation ---

DEGENERATE_AREA_CM2 = 1e-6


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    path: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.code] = out.get(v.code, 0) + 1
        return out

    def add(self, code: str, message: str, path: str) -> None:
        self.violations.append(Violation(code, message, path))

    def to_json(self) -> str:
        return json.dumps(
            {
                "ok": self.ok,
                "violations": [{"code": v.code, "message": v.message, "path": v.path} for v in self.violations],
            },
            indent=2,
        )

    def __str__(self) -> str:
        if self.ok:
            return "scene ok: no violations"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  [{v.code}] {v.path}: {v.message}" for v in self.violations]
        return "\n".join(lines)


def validate_scene(scene: Scene, known_categories="default") -> ValidationReport:
    """Structural checks; every problem lands in the report, nothing raises.

    ``known_categories`` is a set of category names; furniture with a name
    outside the set is flagged (but still usable downstream). The default is
    the stock house palette; pass ``None`` to skip the category check.
    """
    from .palette import canonical_name, default_house_palette

    if known_categories == "default":
        known_categories = set(default_house_palette().names())
    elif known_categories is not None:
        known_categories = {canonical_name(c) for c in known_categories}
    report = ValidationReport()

    polygons = []
    for i, room in enumerate(scene.rooms):
        path = f"$.rooms[{i}]"
        pts = room.wall_points
        if len(pts) < 3:
            report.add("degenerate_room", f"room '{room.room_id}' has {len(pts)} wall points (need >= 3)", path)
            polygons.append(None)
            continue
        area = geometry.polygon_area(pts)
        if abs(area) <= DEGENERATE_AREA_CM2:
            report.add("degenerate_room", f"room '{room.room_id}' polygon has zero area", path)
            polygons.append(None)
            continue
        polygons.append(pts)

    for i, op in enumerate(scene.openings):
        path = f"$.windowsDoors[{i}]"
        if min(op.length, op.width, op.height) <= 0:
            report.add("nonpositive_dimension", f"{op.kind} has non-positive dimensions", path)
        if not all(math.isfinite(v) for v in (*op.pos, op.rotate)):
            report.add("nonfinite_value", f"{op.kind} has non-finite pos/rotate", path)

    room_occupied = [False] * len(scene.rooms)
    for i, item in enumerate(scene.furniture):
        path = f"$.furniture[{i}]"
        if min(item.length, item.width, item.height) <= 0:
            report.add("nonpositive_dimension", f"furniture '{item.category}' has non-positive dimensions", path)
            continue
        if not all(math.isfinite(v) for v in (*item.pos, item.rotate)):
            report.add("nonfinite_value", f"furniture '{item.category}' has non-finite pos/rotate", path)
            continue
        if known_categories is not None and canonical_name(item.category) not in known_categories:
            report.add("unknown_category", f"category '{item.category}' is not in the palette", path)
        cx, cy = item.pos[0], item.pos[1]
        inside_any = False
        for j, poly in enumerate(polygons):
            if poly is not None and geometry.point_in_polygon(cx, cy, poly):
                inside_any = True
                room_occupied[j] = True
        if scene.rooms and not inside_any:
            report.add(
                "furniture_outside_rooms",
                f"furniture '{item.category}' centroid ({cx:.1f}, {cy:.1f}) lies outside every room",
                path,
            )

    for j, room in enumerate(scene.rooms):
        if polygons[j] is not None and not room_occupied[j]:
            report.add("empty_room", f"room '{room.room_id}' contains no furniture centroid", f"$.rooms[{j}]")

    return report
