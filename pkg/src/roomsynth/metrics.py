"""Collision metrics over oriented-box footprints, plus corpus statistics.

POR (pairwise overlap ratio) is the fraction of unordered object pairs whose
footprints intersect by more than a small area epsilon; PIoU is the mean over
pairs of footprint intersection-over-union. Corpus aggregates are arithmetic
means of per-scene values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import geometry
from .scene import OrientedBox, Scene

# Exactly touching boxes (shared edge) do not count as colliding.
AREA_EPSILON_CM2 = 1.0


def footprint_intersection_area(a: OrientedBox, b: OrientedBox) -> float:
    """Area (cm^2) of the intersection of two box footprints."""
    return geometry.convex_intersection_area(a.footprint(), b.footprint())


def footprint_iou(a: OrientedBox, b: OrientedBox) -> float:
    inter = footprint_intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    union = a.footprint_area() + b.footprint_area() - inter
    return inter / union if union > 0.0 else 0.0


def _boxes(scene_or_boxes) -> Sequence[OrientedBox]:
    if isinstance(scene_or_boxes, Scene):
        return scene_or_boxes.furniture
    return list(scene_or_boxes)


def scene_por(scene_or_boxes, eps_area: float = AREA_EPSILON_CM2) -> float:
    """Fraction of unordered pairs with intersection area > eps_area."""
    boxes = _boxes(scene_or_boxes)
    n = len(boxes)
    if n < 2:
        return 0.0
    hits = sum(1 for a, b in combinations(boxes, 2) if footprint_intersection_area(a, b) > eps_area)
    return hits / (n * (n - 1) / 2)


def scene_piou(scene_or_boxes) -> float:
    """Mean over unordered pairs of footprint intersection over union."""
    boxes = _boxes(scene_or_boxes)
    n = len(boxes)
    if n < 2:
        return 0.0
    total = sum(footprint_iou(a, b) for a, b in combinations(boxes, 2))
    return total / (n * (n - 1) / 2)


@dataclass(frozen=True)
class SceneMetrics:
    por: float
    piou: float
    pair_count: int
    empty_room_count: int
    room_count: int

    def to_dict(self) -> dict:
        return {
            "por": self.por,
            "piou": self.piou,
            "pair_count": self.pair_count,
            "empty_room_count": self.empty_room_count,
            "room_count": self.room_count,
        }


def _empty_room_count(scene: Scene) -> int:
    empty = 0
    for room in scene.rooms:
        if len(room.wall_points) < 3:
            continue
        occupied = any(
            geometry.point_in_polygon(f.pos[0], f.pos[1], room.wall_points) for f in scene.furniture
        )
        if not occupied:
            empty += 1
    return empty


def scene_metrics(scene: Scene) -> SceneMetrics:
    n = len(scene.furniture)
    return SceneMetrics(
        por=scene_por(scene),
        piou=scene_piou(scene),
        pair_count=n * (n - 1) // 2,
        empty_room_count=_empty_room_count(scene),
        room_count=len(scene.rooms),
    )


@dataclass
class CorpusMetrics:
    scene_count: int
    mean_por: float
    mean_piou: float
    empty_room_rate: float
    total_rooms: int
    total_empty_rooms: int
    furniture_histogram: dict[str, int]
    room_count_histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "scene_count": self.scene_count,
            "mean_por": self.mean_por,
            "mean_piou": self.mean_piou,
            "empty_room_rate": self.empty_room_rate,
            "total_rooms": self.total_rooms,
            "total_empty_rooms": self.total_empty_rooms,
            "fid": "n/a",
            "kid": "n/a",
            "furniture_histogram": dict(sorted(self.furniture_histogram.items())),
            "room_count_histogram": {str(k): v for k, v in sorted(self.room_count_histogram.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        rows = [
            ("scenes", f"{self.scene_count}"),
            ("mean POR", f"{self.mean_por:.6f}"),
            ("mean PIoU", f"{self.mean_piou:.6f}"),
            ("empty-room rate", f"{self.empty_room_rate:.6f}"),
            ("rooms (empty/total)", f"{self.total_empty_rooms}/{self.total_rooms}"),
            ("FID", "n/a"),
            ("KID", "n/a"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)

    def furniture_histogram_csv(self) -> str:
        lines = ["category,occurrences"]
        lines += [f"{k},{v}" for k, v in sorted(self.furniture_histogram.items())]
        return "\n".join(lines) + "\n"

    def room_count_histogram_csv(self) -> str:
        lines = ["rooms_per_scene,occurrences"]
        lines += [f"{k},{v}" for k, v in sorted(self.room_count_histogram.items())]
        return "\n".join(lines) + "\n"


def corpus_metrics(scenes: Iterable[Scene]) -> CorpusMetrics:
    """Arithmetic mean of per-scene POR/PIoU plus occupancy statistics."""
    pors: list[float] = []
    pious: list[float] = []
    total_rooms = 0
    total_empty = 0
    furniture_hist: dict[str, int] = {}
    room_hist: dict[int, int] = {}
    count = 0
    for scene in scenes:
        m = scene_metrics(scene)
        pors.append(m.por)
        pious.append(m.piou)
        total_rooms += m.room_count
        total_empty += m.empty_room_count
        room_hist[m.room_count] = room_hist.get(m.room_count, 0) + 1
        for f in scene.furniture:
            furniture_hist[f.category] = furniture_hist.get(f.category, 0) + 1
        count += 1
    if count == 0:
        raise ValueError("corpus_metrics needs a nonempty corpus")
    return CorpusMetrics(
        scene_count=count,
        mean_por=float(np.mean(pors)),
        mean_piou=float(np.mean(pious)),
        empty_room_rate=(total_empty / total_rooms) if total_rooms else 0.0,
        total_rooms=total_rooms,
        total_empty_rooms=total_empty,
        furniture_histogram=furniture_hist,
        room_count_histogram=room_hist,
    )
