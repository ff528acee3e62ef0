"""Synthetic scene generator used as the dataset stand-in for tests and demos.

Scenes are one or more rectangular rooms in a row with shared walls, doors on
shared/outer walls, a window per room, and axis-aligned furniture. In
``forbid`` mode rejection sampling guarantees zero pairwise footprint overlap
(with a minimum gap so rasterized components stay separable); ``force`` mode
plants one overlapping pair with footprint IoU >= 0.2.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from . import geometry
from .scene import Opening, OrientedBox, Room, Scene


class PlacementError(Exception):
    pass


DEFAULT_CATEGORIES = ("bed", "cabinet", "sofa", "table", "shoe_cabinet", "coffee_table")


@dataclass(frozen=True)
class ToyConfig:
    room_count: tuple[int, int] = (1, 2)
    room_width_cm: tuple[float, float] = (500.0, 900.0)
    room_height_cm: tuple[float, float] = (500.0, 900.0)
    furniture_per_room: tuple[int, int] = (2, 4)
    furniture_size_cm: tuple[float, float] = (60.0, 180.0)
    furniture_height_cm: tuple[float, float] = (40.0, 120.0)
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    collision_mode: str = "forbid"  # "forbid" | "force"
    min_gap_cm: float = 14.0
    wall_thickness_cm: float = 24.0
    rotations: tuple[float, ...] = (0.0, 90.0, 180.0, 270.0)
    door_length_cm: float = 95.0
    window_length_cm: float = 130.0
    opening_width_cm: float = 12.0
    max_retries: int = 400
    force_pairs: int = 1  # overlapping pairs planted in "force" mode

    def validated(self) -> "ToyConfig":
        if self.collision_mode not in ("forbid", "force"):
            raise ValueError(f"collision_mode must be 'forbid' or 'force', got '{self.collision_mode}'")
        if self.room_count[0] < 1 or self.room_count[0] > self.room_count[1]:
            raise ValueError("room_count range is invalid")
        if not self.categories:
            raise ValueError("categories must be nonempty")
        return self


def _axis_half_extents(length: float, width: float, rotate: float) -> tuple[float, float]:
    r = np.radians(rotate)
    c, s = abs(np.cos(r)), abs(np.sin(r))
    return 0.5 * (length * c + width * s), 0.5 * (length * s + width * c)


def _inflated_footprint(box: OrientedBox, gap: float) -> np.ndarray:
    return geometry.box_corners(box.pos[0], box.pos[1], box.length + gap, box.width + gap, box.rotate)


def _overlaps_any(candidate: OrientedBox, placed: list[OrientedBox], gap: float) -> bool:
    cand = _inflated_footprint(candidate, gap)
    for other in placed:
        if geometry.convex_intersection_area(cand, other.footprint()) > 0.0:
            return True
    return False


def generate_toy_scene(seed: int, config: ToyConfig = ToyConfig()) -> Scene:
    """Deterministic synthetic scene for a given (seed, config)."""
    config = config.validated()
    rng = np.random.default_rng(seed)

    n_rooms = int(rng.integers(config.room_count[0], config.room_count[1] + 1))
    rooms: list[Room] = []
    openings: list[Opening] = []
    x0 = 0.0
    spans: list[tuple[float, float, float]] = []  # (x0, x1, height)
    for i in range(n_rooms):
        w = float(rng.uniform(*config.room_width_cm))
        h = float(rng.uniform(*config.room_height_cm))
        pts = np.array([(x0, 0.0), (x0 + w, 0.0), (x0 + w, h), (x0, h)])
        rooms.append(Room(room_id=f"room{i}", room_name=f"room{i}", room_type=i % 5 + 1, wall_points=pts))
        spans.append((x0, x0 + w, h))
        x0 += w

    wt = config.wall_thickness_cm
    for i, (rx0, rx1, rh) in enumerate(spans):
        if i == 0:
            # Entrance door on the left outer wall.
            openings.append(
                Opening("door", (rx0, rh / 2.0, 0.0), config.door_length_cm, config.opening_width_cm, 210.0, 90.0)
            )
        else:
            shared_h = min(rh, spans[i - 1][2])
            openings.append(
                Opening("door", (rx0, shared_h / 2.0, 0.0), config.door_length_cm, config.opening_width_cm, 210.0, 90.0)
            )
        openings.append(
            Opening("window", ((rx0 + rx1) / 2.0, rh, 90.0), config.window_length_cm, config.opening_width_cm, 110.0, 0.0)
        )

    furniture: list[OrientedBox] = []
    for rx0, rx1, rh in spans:
        n_items = int(rng.integers(config.furniture_per_room[0], config.furniture_per_room[1] + 1))
        placed_here: list[OrientedBox] = []
        for _ in range(n_items):
            item = None
            for _attempt in range(config.max_retries):
                category = str(rng.choice(config.categories))
                length = float(rng.uniform(*config.furniture_size_cm))
                width = float(rng.uniform(*config.furniture_size_cm))
                height = float(rng.uniform(*config.furniture_height_cm))
                rotate = float(rng.choice(config.rotations))
                ex, ey = _axis_half_extents(length, width, rotate)
                inset = wt / 2.0 + config.min_gap_cm / 2.0
                lo_x, hi_x = rx0 + inset + ex, rx1 - inset - ex
                lo_y, hi_y = inset + ey, rh - inset - ey
                if lo_x >= hi_x or lo_y >= hi_y:
                    continue
                cx = float(rng.uniform(lo_x, hi_x))
                cy = float(rng.uniform(lo_y, hi_y))
                candidate = OrientedBox(category, (cx, cy, 0.0), length, width, height, rotate)
                if _overlaps_any(candidate, furniture, config.min_gap_cm):
                    continue
                item = candidate
                break
            if item is None:
                raise PlacementError(
                    f"could not place {n_items} items in a {rx1 - rx0:.0f}x{rh:.0f} room "
                    f"after {config.max_retries} retries"
                )
            furniture.append(item)
            placed_here.append(item)

    if config.collision_mode == "force":
        if not furniture:
            raise PlacementError("force mode needs at least one placed item to collide with")
        sources = sorted(furniture, key=lambda b: -b.footprint_area())[: max(1, config.force_pairs)]
        for source in sources:
            others = [c for c in config.categories if c != source.category] or list(config.categories)
            partner_cat = str(rng.choice(others))
            r = np.radians(source.rotate)
            shift = source.length / 3.0
            dx, dy = shift * float(np.cos(r)), shift * float(np.sin(r))
            partner = OrientedBox(
                partner_cat,
                (source.pos[0] + dx, source.pos[1] + dy, 0.0),
                source.length,
                source.width,
                source.height,
                source.rotate,
            )
            inter = geometry.convex_intersection_area(source.footprint(), partner.footprint())
            union = 2.0 * source.footprint_area() - inter
            assert inter / union >= 0.2, "forced pair must have footprint IoU >= 0.2"
            furniture.append(partner)

    return Scene(tuple(rooms), tuple(openings), tuple(furniture))


def generate_toy_corpus(seed: int, count: int, config: ToyConfig = ToyConfig()) -> list[Scene]:
    """``count`` scenes from consecutive sub-seeds of ``seed``.

    Sub-seeds whose placement sampling comes up infeasible are skipped (still
    deterministic); a config that fails too often raises.
    """
    scenes: list[Scene] = []
    sub = seed * 1_000_003
    attempts = 0
    while len(scenes) < count:
        if attempts >= 20 * count + 100:
            raise PlacementError(f"config too tight: {len(scenes)}/{count} scenes after {attempts} attempts")
        try:
            scenes.append(generate_toy_scene(sub + attempts, config))
        except PlacementError:
            pass
        attempts += 1
    return scenes


# --- key=value config file format ---

def config_to_text(config: ToyConfig) -> str:
    lines = []
    for f in fields(ToyConfig):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            lines.append(f"{f.name}={','.join(str(x) for x in v)}")
        else:
            lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ToyConfig:
    base = ToyConfig()
    updates = {}
    known = {f.name: f for f in fields(ToyConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got '{raw}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key '{key}'")
        current = getattr(base, key)
        if isinstance(current, tuple):
            parts = [p.strip() for p in value.split(",") if p.strip()]
            if key == "categories":
                updates[key] = tuple(parts)
            elif key == "rotations":
                updates[key] = tuple(float(p) for p in parts)
            elif key == "room_count" or key == "furniture_per_room":
                updates[key] = tuple(int(float(p)) for p in parts)
            else:
                updates[key] = tuple(float(p) for p in parts)
        elif isinstance(current, bool):
            updates[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            updates[key] = int(float(value))
        elif isinstance(current, float):
            updates[key] = float(value)
        else:
            updates[key] = value
    return replace(base, **updates).validated()


def load_toy_config(path) -> ToyConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())


def save_toy_config(config: ToyConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(config))
