"""Deterministic layout-image decoding: color classification, oriented-box
detection, and room segmentation.

Rendered colors uniquely identify categories (body and orientation-marker
shades separately), so decoding is exact nearest-color matching followed by
connected-component analysis and minimum-area rectangle fitting. The marker
strip along each footprint's front edge disambiguates the facing direction;
without it a rectangle's rotation is only known modulo 90 degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import geometry
from .palette import COLLISION_FLOOR, Category, Palette, canonical_name, gray_to_room_type
from .raster import LayoutImage, WorldTransform
from .scene import OrientedBox, Room, Scene

DEFAULT_TAU = 0.06
DEFAULT_MIN_AREA_PX = 9
SNAP_TOLERANCE_DEG = 10.0
SPLIT_FILL_RATIO = 0.75
STRUCTURAL_CATEGORIES = ("wall", "door", "window")


class PerceptionError(Exception):
    pass


@dataclass
class LabelMap:
    labels: np.ndarray  # (H, W) int; 0 = background
    legend: list[tuple[str, str]]  # 1-based: (category name, "body" | "marker")
    tau: float

    def mask_for(self, category: str, parts=("body", "marker")) -> np.ndarray:
        name = canonical_name(category)
        ids = [i + 1 for i, (cat, part) in enumerate(self.legend) if cat == name and part in parts]
        return np.isin(self.labels, ids)

    def categories_present(self) -> list[str]:
        present = np.unique(self.labels)
        return sorted({self.legend[i - 1][0] for i in present if i > 0})


def classify_pixels(image: LayoutImage | np.ndarray, palette: Palette, tau: float = DEFAULT_TAU) -> LabelMap:
    """Assign each pixel the nearest rendered palette color within ``tau``.

    Pixels farther than ``tau`` from every rendered color are background.
    Raises at setup when the palette's rendered colors are too close to
    separate at all (quantization floor).
    """
    palette.verify_separation(COLLISION_FLOOR)
    pixels = image.pixels if isinstance(image, LayoutImage) else np.asarray(image, dtype=float)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise PerceptionError(f"expected (H, W, 3) image, got {pixels.shape}")
    table = palette.rendered_color_table()
    colors = np.array([c for _, _, c in table])  # (K, 3)
    legend = [(name, part) for name, part, _ in table]

    h, w, _ = pixels.shape
    flat = pixels.reshape(-1, 3)
    labels = np.zeros(h * w, dtype=np.int16)
    # Row-chunked distance computation keeps memory flat for big palettes.
    chunk = max(1, (1 << 21) // max(len(colors), 1))
    for start in range(0, flat.shape[0], chunk):
        block = flat[start : start + chunk]
        d2 = ((block[:, None, :] - colors[None, :, :]) ** 2).sum(axis=2)
        best = np.argmin(d2, axis=1)
        ok = d2[np.arange(len(block)), best] <= tau * tau
        labels[start : start + chunk] = np.where(ok, best + 1, 0)
    return LabelMap(labels.reshape(h, w), legend, tau)


@dataclass
class Detection:
    category: Category
    box: OrientedBox
    pixel_mask: np.ndarray  # (N, 2) array of (row, col) pixels
    confidence: float
    orientation_confidence: float

    def to_dict(self) -> dict:
        return {
            "type": self.category.name,
            "pos": [round(float(v), 4) for v in self.box.pos],
            "length": round(float(self.box.length), 4),
            "width": round(float(self.box.width), 4),
            "height": round(float(self.box.height), 4),
            "rotate": round(float(self.box.rotate), 4),
            "confidence": round(float(self.confidence), 4),
            "orientation_confidence": round(float(self.orientation_confidence), 4),
        }


def detections_to_json(detections: list[Detection]) -> str:
    return json.dumps([d.to_dict() for d in detections], indent=2)


def detections_from_json(text: str, palette: Palette) -> list[OrientedBox]:
    """Boxes only; pixel-level fields do not survive the round trip."""
    out = []
    for rec in json.loads(text):
        out.append(
            OrientedBox(
                canonical_name(rec["type"]),
                tuple(float(v) for v in rec["pos"]),
                float(rec["length"]),
                float(rec["width"]),
                float(rec["height"]),
                float(rec["rotate"]) % 360.0,
            )
        )
    return out


def _pixel_corner_cloud(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Corner points (px coords) of every pixel in a component."""
    base = np.stack([cols, rows], axis=1).astype(float)
    corners = np.concatenate([base + off for off in ((0, 0), (1, 0), (0, 1), (1, 1))])
    return np.unique(corners, axis=0)


def _split_merged_component(comp: np.ndarray, min_area: int) -> list[np.ndarray] | None:
    """Erode until the blob separates, then assign pixels to the nearest core."""
    eroded = comp
    for _ in range(24):
        eroded = ndimage.binary_erosion(eroded)
        if not eroded.any():
            return None
        cores, n = ndimage.label(eroded, structure=np.ones((3, 3), dtype=int))
        if n >= 2:
            far = ndimage.distance_transform_edt(cores == 0, return_indices=True, return_distances=False)
            owner = cores[far[0], far[1]]
            parts = []
            for k in range(1, n + 1):
                part = comp & (owner == k)
                if part.sum() >= min_area:
                    parts.append(part)
            return parts if len(parts) >= 2 else None
    return None


def _fit_component(
    comp_rows: np.ndarray,
    comp_cols: np.ndarray,
    marker_mask: np.ndarray,
    transform: WorldTransform,
    snap_tol_deg: float,
) -> tuple[OrientedBox, float, float]:
    """Min-area rectangle in world space plus marker-resolved orientation.

    Returns (box-with-unit-height, rect_area_px, orientation_confidence).
    """
    cloud_px = _pixel_corner_cloud(comp_rows, comp_cols)
    cloud_world = transform.px_to_world(cloud_px)
    (cx, cy), (e1, e2), theta = geometry.min_area_rect(cloud_world)

    marker_rows = comp_rows[marker_mask[comp_rows, comp_cols]]
    marker_cols = comp_cols[marker_mask[comp_rows, comp_cols]]
    orientation_confidence = 0.0
    rotate = 0.0
    length, width = e1, e2
    if len(marker_rows) > 0:
        centers = np.stack([marker_cols + 0.5, marker_rows + 0.5], axis=1)
        m = transform.px_to_world(centers).mean(axis=0)
        v = m - np.array([cx, cy])
        vn = float(np.hypot(*v))
        if vn > 1e-9:
            v = v / vn
            best_dot = -2.0
            for k in range(4):
                r = theta + 90.0 * k
                front = np.array([-math.sin(math.radians(r)), math.cos(math.radians(r))])
                d = float(v @ front)
                if d > best_dot:
                    best_dot = d
                    rotate = r
                    length, width = (e1, e2) if k % 2 == 0 else (e2, e1)
            orientation_confidence = max(0.0, best_dot)
    if orientation_confidence == 0.0:
        # No usable marker: axis-aligned reading with rotation pinned to 0.
        xs, ys = cloud_world[:, 0], cloud_world[:, 1]
        cx, cy = float((xs.min() + xs.max()) / 2), float((ys.min() + ys.max()) / 2)
        length, width = float(xs.max() - xs.min()), float(ys.max() - ys.min())
        rotate = 0.0
    else:
        for snapped in (0.0, 90.0, 180.0, 270.0):
            delta = abs((rotate - snapped + 180.0) % 360.0 - 180.0)
            if delta <= snap_tol_deg:
                rotate = snapped
                break
    rect_area_px = max(1.0, (e1 * transform.scale) * (e2 * transform.scale))
    box = OrientedBox("", (float(cx), float(cy), 0.0), float(length), float(width), 0.0, rotate % 360.0)
    return box, rect_area_px, orientation_confidence


def detect_objects(
    image: LayoutImage,
    palette: Palette,
    transform: WorldTransform | None = None,
    tau: float = DEFAULT_TAU,
    min_area: int = DEFAULT_MIN_AREA_PX,
    snap_tol_deg: float = SNAP_TOLERANCE_DEG,
    split_fill_ratio: float = SPLIT_FILL_RATIO,
    include_structural: bool = False,
) -> list[Detection]:
    """Decode furniture boxes from a layout image.

    Connected components per category (8-connectivity) are fitted with a
    minimum-area rotated rectangle; the marker strip resolves which of the four
    rectangle orientations is the front. Components below ``min_area`` pixels
    are dropped. With ``include_structural`` doors and windows are decoded too
    (walls never are).
    """
    transform = transform or image.transform
    label_map = classify_pixels(image, palette, tau)
    skip = {"wall"} if include_structural else set(STRUCTURAL_CATEGORIES)

    detections: list[Detection] = []
    for name in label_map.categories_present():
        if name in skip:
            continue
        mask = label_map.mask_for(name)
        marker_mask = label_map.mask_for(name, parts=("marker",))
        comp_labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
        for comp_id in range(1, n_comp + 1):
            comp = comp_labels == comp_id
            count = int(comp.sum())
            if count < min_area:
                continue
            pieces = [comp]
            rows, cols = np.nonzero(comp)
            box, rect_px, _ = _fit_component(rows, cols, marker_mask, transform, snap_tol_deg)
            fill = count / rect_px
            if fill < split_fill_ratio:
                split = _split_merged_component(comp, min_area)
                if split is not None:
                    improved = []
                    for part in split:
                        prows, pcols = np.nonzero(part)
                        _, prect, _ = _fit_component(prows, pcols, marker_mask, transform, snap_tol_deg)
                        improved.append(part.sum() / prect > fill)
                    if all(improved):
                        pieces = split
            for piece in pieces:
                rows, cols = np.nonzero(piece)
                if len(rows) < min_area:
                    continue
                box, rect_px, oconf = _fit_component(rows, cols, marker_mask, transform, snap_tol_deg)
                entry = palette[name]
                detections.append(
                    Detection(
                        category=entry.category,
                        box=OrientedBox(name, box.pos, box.length, box.width, box.height, box.rotate),
                        pixel_mask=np.stack([rows, cols], axis=1),
                        confidence=min(1.0, len(rows) / rect_px),
                        orientation_confidence=oconf,
                    )
                )
    detections.sort(key=lambda d: (int(d.pixel_mask[:, 0].min()), int(d.pixel_mask[:, 1].min()), d.category.name))
    return detections


@dataclass
class RoomMask:
    room_type: int | None
    room_name: str
    polygon: np.ndarray  # world cm
    pixels: np.ndarray | None = None  # bool (H, W); None on the exact Scene path


def _trace_mask_boundary(mask: np.ndarray) -> np.ndarray:
    """Outer boundary loop of a pixel region, as lattice vertices (px coords).

    Emits each exposed pixel edge with the region kept on one consistent side,
    chains the segments into loops, and returns the largest loop with
    collinear runs merged.
    """
    rows, cols = np.nonzero(mask)
    nxt: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a, b):
        nxt.setdefault(a, []).append(b)

    up = np.zeros_like(mask)
    up[1:, :] = mask[:-1, :]
    down = np.zeros_like(mask)
    down[:-1, :] = mask[1:, :]
    left = np.zeros_like(mask)
    left[:, 1:] = mask[:, :-1]
    right = np.zeros_like(mask)
    right[:, :-1] = mask[:, 1:]
    for r, c in zip(rows, cols):
        if not up[r, c]:
            add((c, r), (c + 1, r))
        if not right[r, c]:
            add((c + 1, r), (c + 1, r + 1))
        if not down[r, c]:
            add((c + 1, r + 1), (c, r + 1))
        if not left[r, c]:
            add((c, r + 1), (c, r))

    loops = []
    while nxt:
        start = min(nxt)
        loop = [start]
        cur = start
        while True:
            outs = nxt.get(cur)
            if not outs:
                break
            nxt_pt = outs.pop()
            if not outs:
                del nxt[cur]
            if nxt_pt == start:
                break
            loop.append(nxt_pt)
            cur = nxt_pt
        if len(loop) >= 4:
            loops.append(np.array(loop, dtype=float))
    if not loops:
        raise PerceptionError("region has no traceable boundary")
    best = max(loops, key=lambda lp: abs(geometry.polygon_area(lp)))
    # Merge collinear lattice steps.
    keep = []
    n = len(best)
    for i in range(n):
        prev_d = best[i] - best[i - 1]
        next_d = best[(i + 1) % n] - best[i]
        if prev_d[0] * next_d[1] - prev_d[1] * next_d[0] != 0:
            keep.append(best[i])
    return np.array(keep, dtype=float)


def segment_rooms(
    source: Scene | LayoutImage,
    palette: Palette,
    tau: float = DEFAULT_TAU,
    min_region_px: int = 16,
) -> list[RoomMask]:
    """Room regions, either exactly from a scene or by flood fill of a plan.

    The image path treats walls, doors, and windows as barriers, labels the
    remaining connected regions, and discards any region touching the image
    border (an unclosed wall loop leaks to the border, so that region is
    exterior, not a room). Room types come from open-plan gray fills when
    present.
    """
    if isinstance(source, Scene):
        return [
            RoomMask(room_type=r.room_type, room_name=r.room_name, polygon=r.wall_points.copy())
            for r in source.rooms
        ]

    label_map = classify_pixels(source, palette, tau)
    barrier = np.zeros(label_map.labels.shape, dtype=bool)
    for name in STRUCTURAL_CATEGORIES:
        if name in palette:
            barrier |= label_map.mask_for(name)
    free = ~barrier
    regions, n_regions = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    border_ids = set(np.unique(np.concatenate([regions[0], regions[-1], regions[:, 0], regions[:, -1]])))

    rooms: list[RoomMask] = []
    pixels = source.pixels
    for rid in range(1, n_regions + 1):
        if rid in border_ids:
            continue
        mask = regions == rid
        if int(mask.sum()) < min_region_px:
            continue
        poly_px = _trace_mask_boundary(mask)
        polygon = source.transform.px_to_world(poly_px)
        region_colors = pixels[mask]
        med = np.median(region_colors, axis=0)
        room_type = None
        if np.ptp(med) < 0.02:  # gray fill
            room_type = gray_to_room_type(float(med.mean()))
        rooms.append(RoomMask(room_type=room_type, room_name=f"region{len(rooms)}", polygon=polygon, pixels=mask))
    return rooms
