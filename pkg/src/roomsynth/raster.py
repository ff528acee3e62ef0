"""Color-coded top-down rasterization of scenes.

Produces the RGB layout images the diffusion model trains on and samples, plus
the matching condition images (floor plan only, open-plan variants, and the
fixed-window parent-boundary images used for fine-grained generation).

Rendering rules: semi-transparent furniture bodies composite source-over onto
a white background; each body carries an orientation-marker strip along its
front edge; walls are opaque black strokes at true world thickness with doors
and windows painted opaque on top. Anti-aliasing is off by default so every
rendered pixel takes one of finitely many colors the decoder can invert.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import geometry
from .palette import (
    MARKER_ALPHA,
    MARKER_DEPTH_FRACTION,
    Palette,
    PaletteError,
    room_type_gray,
)
from .scene import Opening, OrientedBox, Scene

DEFAULT_CANVAS = (256, 256)
DEFAULT_MARGIN = 8
WALL_THICKNESS_CM = 24.0
PARENT_WINDOW_CM = 200.0
PARENT_OUTLINE_CM = 6.0


class TransformError(Exception):
    pass


@dataclass(frozen=True)
class WorldTransform:
    """Similarity map from world cm to continuous pixel coordinates.

    px = scale * wx + tx, py = ty - scale * wy (y flips so world +y points up
    in the saved image). Isotropic by construction, hence invertible.
    """

    scale: float
    tx: float
    ty: float

    def world_to_px(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.empty_like(p)
        out[:, 0] = self.scale * p[:, 0] + self.tx
        out[:, 1] = self.ty - self.scale * p[:, 1]
        return out

    def px_to_world(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.empty_like(p)
        out[:, 0] = (p[:, 0] - self.tx) / self.scale
        out[:, 1] = (self.ty - p[:, 1]) / self.scale
        return out

    def to_dict(self) -> dict:
        return {"scale": self.scale, "tx": self.tx, "ty": self.ty}

    @staticmethod
    def from_dict(d: dict) -> "WorldTransform":
        return WorldTransform(float(d["scale"]), float(d["tx"]), float(d["ty"]))


@dataclass
class LayoutImage:
    pixels: np.ndarray  # (H, W, 3) float in [0, 1]
    transform: WorldTransform
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "LayoutImage":
        return LayoutImage(self.pixels.copy(), self.transform, dict(self.meta))


def fit_transform(
    scene: Scene, canvas: tuple[int, int] = DEFAULT_CANVAS, margin: int = DEFAULT_MARGIN
) -> WorldTransform:
    """Uniform-scale transform fitting the scene bounding box into the canvas.

    The box (rooms, openings, and furniture together) lands centered inside
    the canvas minus the margin; aspect ratio is preserved.
    """
    try:
        xmin, ymin, xmax, ymax = scene.bounding_box()
    except ValueError as e:
        raise TransformError(str(e)) from e
    bw, bh = xmax - xmin, ymax - ymin
    if bw <= 1e-9 and bh <= 1e-9:
        raise TransformError("scene bounding box has zero extent")
    w, h = canvas
    avail_w, avail_h = w - 2 * margin, h - 2 * margin
    if avail_w <= 0 or avail_h <= 0:
        raise TransformError(f"canvas {canvas} leaves no room inside margin {margin}")
    candidates = []
    if bw > 0:
        candidates.append(avail_w / bw)
    if bh > 0:
        candidates.append(avail_h / bh)
    scale = min(candidates)
    cx, cy = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
    tx = w / 2.0 - scale * cx
    ty = h / 2.0 + scale * cy
    return WorldTransform(scale, tx, ty)


def _blank(canvas: tuple[int, int], background) -> np.ndarray:
    w, h = canvas
    img = np.empty((h, w, 3), dtype=float)
    img[:] = np.asarray(background, dtype=float)
    return img


def _pixel_window(transform: WorldTransform, world_pts: np.ndarray, pad_px: float, shape) -> tuple[slice, slice] | None:
    """Clamped (rows, cols) slices covering the world points plus padding."""
    px = transform.world_to_px(world_pts)
    h, w = shape[:2]
    c0 = max(0, int(math.floor(px[:, 0].min() - pad_px)))
    c1 = min(w, int(math.ceil(px[:, 0].max() + pad_px)) + 1)
    r0 = max(0, int(math.floor(px[:, 1].min() - pad_px)))
    r1 = min(h, int(math.ceil(px[:, 1].max() + pad_px)) + 1)
    if c0 >= c1 or r0 >= r1:
        return None
    return slice(r0, r1), slice(c0, c1)


def _window_world_centers(transform: WorldTransform, rows: slice, cols: slice) -> np.ndarray:
    cc, rr = np.meshgrid(
        np.arange(cols.start, cols.stop, dtype=float) + 0.5,
        np.arange(rows.start, rows.stop, dtype=float) + 0.5,
    )
    pts = np.stack([cc.ravel(), rr.ravel()], axis=1)
    return transform.px_to_world(pts)


def _blend(img: np.ndarray, rows: slice, cols: slice, mask: np.ndarray, color, alpha: float) -> None:
    if not mask.any():
        return
    window = img[rows, cols]
    c = np.asarray(color, dtype=float)
    if alpha >= 1.0:
        window[mask] = c
    else:
        window[mask] = alpha * c + (1.0 - alpha) * window[mask]


def _draw_box(
    img: np.ndarray,
    transform: WorldTransform,
    box,
    color,
    alpha: float,
    marker: bool,
) -> None:
    corners = geometry.box_corners(box.pos[0], box.pos[1], box.length, box.width, box.rotate)
    win = _pixel_window(transform, corners, 1.0, img.shape)
    if win is None:
        return
    rows, cols = win
    world = _window_world_centers(transform, rows, cols)
    r = math.radians(box.rotate)
    c, s = math.cos(r), math.sin(r)
    dx = world[:, 0] - box.pos[0]
    dy = world[:, 1] - box.pos[1]
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    hx, hy = 0.5 * box.length, 0.5 * box.width
    inside = (np.abs(lx) <= hx) & (np.abs(ly) <= hy)
    shape = (rows.stop - rows.start, cols.stop - cols.start)
    if marker and alpha < 1.0:
        front = inside & (ly >= hy - MARKER_DEPTH_FRACTION * box.width)
        body = inside & ~front
        _blend(img, rows, cols, body.reshape(shape), color, alpha)
        _blend(img, rows, cols, front.reshape(shape), color, MARKER_ALPHA)
    else:
        _blend(img, rows, cols, inside.reshape(shape), color, alpha)


def _draw_stroke(
    img: np.ndarray,
    transform: WorldTransform,
    loop: np.ndarray,
    thickness_cm: float,
    color,
    closed: bool = True,
) -> None:
    pts = np.asarray(loop, dtype=float)
    n = len(pts)
    if n == 0:
        return
    half = thickness_cm / 2.0
    pad_px = half * transform.scale + 1.0
    last = n if closed else n - 1
    for i in range(last):
        a = pts[i]
        b = pts[(i + 1) % n]
        win = _pixel_window(transform, np.array([a, b]), pad_px, img.shape)
        if win is None:
            continue
        rows, cols = win
        world = _window_world_centers(transform, rows, cols)
        v = b - a
        denom = float(v @ v)
        if denom == 0.0:
            d2 = ((world - a) ** 2).sum(axis=1)
        else:
            t = np.clip(((world - a) @ v) / denom, 0.0, 1.0)
            proj = a + t[:, None] * v
            d2 = ((world - proj) ** 2).sum(axis=1)
        mask = d2 <= half * half
        shape = (rows.stop - rows.start, cols.stop - cols.start)
        _blend(img, rows, cols, mask.reshape(shape), color, 1.0)


def _check_categories(scene: Scene, palette: Palette) -> None:
    for item in scene.furniture:
        if item.category not in palette:
            raise PaletteError(f"category '{item.category}' is not in the {palette.level} palette")
    for name in ("wall", "door", "window"):
        if (scene.rooms or scene.openings) and name not in palette:
            raise PaletteError(f"category '{name}' is not in the {palette.level} palette")


def _draw_floorplan_items(img: np.ndarray, transform: WorldTransform, scene: Scene, palette: Palette, wall_thickness_cm: float) -> None:
    if scene.rooms:
        wall = palette["wall"]
        for room in scene.rooms:
            if len(room.wall_points) >= 2:
                _draw_stroke(img, transform, room.wall_points, wall_thickness_cm, wall.color)
    doors = [o for o in scene.openings if o.kind == "door"]
    windows = [o for o in scene.openings if o.kind == "window"]
    for op in doors:
        _draw_box(img, transform, op, palette["door"].color, 1.0, marker=False)
    for op in windows:
        _draw_box(img, transform, op, palette["window"].color, 1.0, marker=False)


def _rasterize(
    scene: Scene,
    palette: Palette,
    canvas: tuple[int, int],
    margin: int,
    wall_thickness_cm: float,
    transform: WorldTransform | None,
    include_furniture: bool,
) -> LayoutImage:
    _check_categories(scene, palette)
    if transform is None:
        transform = fit_transform(scene, canvas, margin)
    img = _blank(canvas, palette.background)

    if include_furniture:
        order = sorted(
            range(len(scene.furniture)),
            key=lambda i: (
                palette[scene.furniture[i].category].layer,
                -scene.furniture[i].footprint_area(),
                i,
            ),
        )
        for i in order:
            item = scene.furniture[i]
            entry = palette[item.category]
            _draw_box(img, transform, item, entry.color, entry.alpha, marker=palette.has_marker(item.category))

    _draw_floorplan_items(img, transform, scene, palette, wall_thickness_cm)
    np.clip(img, 0.0, 1.0, out=img)
    return LayoutImage(img, transform, {"wall_thickness_cm": wall_thickness_cm})


def rasterize_layout(
    scene: Scene,
    palette: Palette,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    margin: int = DEFAULT_MARGIN,
    wall_thickness_cm: float = WALL_THICKNESS_CM,
    transform: WorldTransform | None = None,
    antialias: bool = False,
) -> LayoutImage:
    """Full layout image: furniture (largest footprints first), then walls,
    doors, and windows on top."""
    if antialias:
        return _supersampled(scene, palette, canvas, margin, wall_thickness_cm, transform, True)
    return _rasterize(scene, palette, canvas, margin, wall_thickness_cm, transform, include_furniture=True)


def rasterize_floorplan(
    scene: Scene,
    palette: Palette,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    margin: int = DEFAULT_MARGIN,
    wall_thickness_cm: float = WALL_THICKNESS_CM,
    transform: WorldTransform | None = None,
    antialias: bool = False,
) -> LayoutImage:
    """Condition image: walls, doors, and windows only, in the same transform
    rasterize_layout would use for the full scene."""
    if antialias:
        return _supersampled(scene, palette, canvas, margin, wall_thickness_cm, transform, False)
    return _rasterize(scene, palette, canvas, margin, wall_thickness_cm, transform, include_furniture=False)


def _supersampled(scene, palette, canvas, margin, wall_thickness_cm, transform, include_furniture) -> LayoutImage:
    big_canvas = (canvas[0] * 2, canvas[1] * 2)
    big_t = None
    if transform is not None:
        big_t = WorldTransform(transform.scale * 2, transform.tx * 2, transform.ty * 2)
    big = _rasterize(scene, palette, big_canvas, margin * 2, wall_thickness_cm, big_t, include_furniture)
    h, w = canvas[1], canvas[0]
    px = big.pixels.reshape(h, 2, w, 2, 3).mean(axis=(1, 3))
    small_t = WorldTransform(big.transform.scale / 2, big.transform.tx / 2, big.transform.ty / 2)
    return LayoutImage(px, small_t, dict(big.meta, antialiased=True))


def rasterize_parent_boundary(
    parent: OrientedBox,
    palette: Palette,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    window_cm: float = PARENT_WINDOW_CM,
    outline_cm: float = PARENT_OUTLINE_CM,
) -> LayoutImage:
    """Condition image for fine-grained generation: the parent footprint
    outline inside a fixed world window centered on the parent.

    No fit-to-canvas rescale happens, so item sizes stay absolute; a parent
    larger than the window is clipped and flagged in ``meta['clipped']``.
    """
    if parent.category not in palette:
        raise PaletteError(f"category '{parent.category}' is not in the {palette.level} palette")
    w, h = canvas
    scale = min(w, h) / window_cm
    cx, cy = parent.pos[0], parent.pos[1]
    transform = WorldTransform(scale, w / 2.0 - scale * cx, h / 2.0 + scale * cy)
    img = _blank(canvas, palette.background)
    corners = parent.footprint()
    extent = corners.max(axis=0) - corners.min(axis=0)
    clipped = bool(extent[0] > window_cm or extent[1] > window_cm)
    _draw_stroke(img, transform, corners, outline_cm, palette[parent.category].color)
    np.clip(img, 0.0, 1.0, out=img)
    return LayoutImage(img, transform, {"window_cm": window_cm, "clipped": clipped})


def rasterize_room_types(
    scene: Scene,
    palette: Palette,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    margin: int = DEFAULT_MARGIN,
    wall_thickness_cm: float = WALL_THICKNESS_CM,
    transform: WorldTransform | None = None,
) -> LayoutImage:
    """Floor plan with rooms filled by their room-type gray code (the target
    side of open-plan conditioning). Rooms with no gray code stay unfilled."""
    if transform is None:
        transform = fit_transform(scene, canvas, margin)
    img = _blank(canvas, palette.background)
    for room in scene.rooms:
        gray = room_type_gray(room.room_type)
        if gray is None or len(room.wall_points) < 3:
            continue
        win = _pixel_window(transform, room.wall_points, 1.0, img.shape)
        if win is None:
            continue
        rows, cols = win
        world = _window_world_centers(transform, rows, cols)
        mask = geometry.points_in_polygon(world, room.wall_points)
        shape = (rows.stop - rows.start, cols.stop - cols.start)
        _blend(img, rows, cols, mask.reshape(shape), (gray, gray, gray), 1.0)
    _draw_floorplan_items(img, transform, scene, palette, wall_thickness_cm)
    np.clip(img, 0.0, 1.0, out=img)
    return LayoutImage(img, transform, {"wall_thickness_cm": wall_thickness_cm, "room_type_fill": True})


def rasterize_openplan(
    scene: Scene,
    palette: Palette,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    margin: int = DEFAULT_MARGIN,
    wall_thickness_cm: float = WALL_THICKNESS_CM,
    transform: WorldTransform | None = None,
) -> LayoutImage:
    """Open-plan condition image: only the outer boundary of the union of all
    rooms, at wall thickness, with no interior walls."""
    if transform is None:
        transform = fit_transform(scene, canvas, margin)
    w, h = canvas
    filled = np.zeros((h, w), dtype=bool)
    for room in scene.rooms:
        if len(room.wall_points) < 3:
            continue
        win = _pixel_window(transform, room.wall_points, 1.0, filled.shape + (3,))
        if win is None:
            continue
        rows, cols = win
        world = _window_world_centers(transform, rows, cols)
        mask = geometry.points_in_polygon(world, room.wall_points)
        filled[rows, cols] |= mask.reshape(rows.stop - rows.start, cols.stop - cols.start)
    half_px = max(1, int(round(wall_thickness_cm * transform.scale / 2.0)))
    boundary = filled & ~ndimage.binary_erosion(filled)
    stroke = ndimage.binary_dilation(boundary, iterations=half_px)
    img = _blank(canvas, palette.background)
    img[stroke] = palette["wall"].color if "wall" in palette else (0.0, 0.0, 0.0)
    return LayoutImage(img, transform, {"wall_thickness_cm": wall_thickness_cm, "openplan": True})


# --- PNG round trip with embedded metadata ---


def save_png(image: LayoutImage, path, extra_meta: dict | None = None) -> None:
    from PIL import Image
    from PIL.PngImagePlugin import PngInfo

    arr = np.clip(np.round(image.pixels * 255.0), 0, 255).astype(np.uint8)
    info = PngInfo()
    info.add_text("roomsynth:transform", json.dumps(image.transform.to_dict()))
    meta = dict(image.meta)
    if extra_meta:
        meta.update(extra_meta)
    info.add_text("roomsynth:meta", json.dumps(meta))
    Image.fromarray(arr, mode="RGB").save(path, pnginfo=info)


def load_png(path) -> LayoutImage:
    from PIL import Image

    with Image.open(path) as im:
        rgb = im.convert("RGB")
        text = dict(getattr(im, "text", {}) or {})
        arr = np.asarray(rgb, dtype=float) / 255.0
    if "roomsynth:transform" in text:
        transform = WorldTransform.from_dict(json.loads(text["roomsynth:transform"]))
        meta = json.loads(text.get("roomsynth:meta", "{}"))
    else:
        transform = WorldTransform(1.0, 0.0, float(arr.shape[0]))
        meta = {"has_world_transform": False}
    return LayoutImage(arr, transform, meta)
