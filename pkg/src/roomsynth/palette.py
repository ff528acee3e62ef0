"""Category palettes: the color code that makes layout images decodable.

Each category owns a unique RGB color within its level ("house" for room-scale
items, "fine" for tabletop items). Household categories render semi-transparent
(alpha 0.3 by default) over a white background; walls, doors, and windows are
opaque. Because compositing happens over a known background, every rendered
color can be inverted back to its category, which is what the detector relies
on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

HOUSEHOLD_ALPHA = 0.3
# 0.695 maximizes the minimum pairwise distance between rendered colors of the
# default palettes (0.031); several other alphas make marker colors coincide
# exactly with other categories' body colors (e.g. 0.6: 0.6*FFCC99 + 0.4*white
# == 0.3*FF9933 + 0.7*white).
MARKER_ALPHA = 0.695
MARKER_DEPTH_FRACTION = 0.12

# Rendered colors closer than this are genuinely indistinguishable after 8-bit
# quantization; the decoder refuses such palettes at setup.
COLLISION_FLOOR = 0.01

FURNITURE_LAYER = 0
WALL_LAYER = 1
DOOR_LAYER = 2
WINDOW_LAYER = 3


class PaletteError(Exception):
    pass


class AmbiguityError(PaletteError):
    """Two palette entries render to colors too close to tell apart."""


def canonical_name(name: str) -> str:
    return "_".join(name.strip().lower().replace("-", " ").replace("_", " ").split())


def hex_to_rgb(hex_color: str) -> tuple[float, float, float]:
    h = hex_color.strip().lstrip("#")
    if len(h) != 6:
        raise PaletteError(f"bad hex color '{hex_color}'")
    return tuple(int(h[i : i + 2], 16) / 255.0 for i in (0, 2, 4))  # type: ignore[return-value]


def rgb_to_hex(rgb) -> str:
    return "".join(f"{int(round(c * 255)):02X}" for c in rgb)


@dataclass(frozen=True)
class Category:
    name: str
    level: str  # "house" | "fine"
    color: tuple[float, float, float]


@dataclass(frozen=True)
class PaletteEntry:
    category: Category
    alpha: float
    layer: int

    @property
    def name(self) -> str:
        return self.category.name

    @property
    def color(self) -> tuple[float, float, float]:
        return self.category.color


class Palette:
    def __init__(
        self,
        entries: dict[str, tuple[str, float, int]],
        level: str = "house",
        background: str = "FFFFFF",
    ):
        """``entries`` maps category name -> (hex color, alpha, layer)."""
        self.level = level
        self.background: tuple[float, float, float] = hex_to_rgb(background)
        self.entries: dict[str, PaletteEntry] = {}
        seen_colors: dict[str, str] = {}
        for raw_name, (hex_color, alpha, layer) in entries.items():
            name = canonical_name(raw_name)
            if name in self.entries:
                raise PaletteError(f"duplicate category '{name}'")
            key = hex_color.upper().lstrip("#")
            if key in seen_colors:
                raise PaletteError(f"color {key} assigned to both '{seen_colors[key]}' and '{name}'")
            seen_colors[key] = name
            if not 0.0 <= alpha <= 1.0:
                raise PaletteError(f"alpha for '{name}' must be in [0, 1]")
            self.entries[name] = PaletteEntry(Category(name, level, hex_to_rgb(hex_color)), float(alpha), int(layer))

    def __contains__(self, name: str) -> bool:
        return canonical_name(name) in self.entries

    def __getitem__(self, name: str) -> PaletteEntry:
        key = canonical_name(name)
        if key not in self.entries:
            raise PaletteError(f"category '{name}' is not in the {self.level} palette")
        return self.entries[key]

    def get(self, name: str) -> PaletteEntry | None:
        return self.entries.get(canonical_name(name))

    def names(self) -> list[str]:
        return sorted(self.entries)

    def body_color(self, name: str) -> np.ndarray:
        """Rendered color of the category body over the background."""
        e = self[name]
        return self.composite(e.color, e.alpha)

    def marker_color(self, name: str) -> np.ndarray:
        """Rendered color of the orientation-marker strip over the background."""
        e = self[name]
        return self.composite(e.color, MARKER_ALPHA)

    def composite(self, color, alpha: float) -> np.ndarray:
        c = np.asarray(color, dtype=float)
        bg = np.asarray(self.background, dtype=float)
        return alpha * c + (1.0 - alpha) * bg

    def has_marker(self, name: str) -> bool:
        # Opaque entries (walls/openings) render without orientation markers.
        return self[name].alpha < 1.0

    def rendered_color_table(self) -> list[tuple[str, str, np.ndarray]]:
        """All distinguishable (name, part, rgb) triples the renderer can emit."""
        table = []
        for name, e in sorted(self.entries.items()):
            table.append((name, "body", self.composite(e.color, e.alpha)))
            if self.has_marker(name):
                table.append((name, "marker", self.composite(e.color, MARKER_ALPHA)))
        return table

    def verify_separation(self, floor: float = COLLISION_FLOOR) -> float:
        """Minimum pairwise distance between rendered colors; raises when < floor.

        Run once when a decoder is set up: rendered colors closer than the
        floor cannot be told apart after quantization, so classification would
        be ambiguous.
        """
        tau = floor
        table = self.rendered_color_table()
        colors = np.array([c for _, _, c in table])
        labels = [(n, p) for n, p, _ in table] + [("background", "body")]
        colors = np.vstack([colors, np.asarray(self.background, dtype=float)])
        diff = colors[:, None, :] - colors[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        idx = np.unravel_index(np.argmin(dist), dist.shape)
        dmin = float(dist[idx])
        if dmin < tau:
            a, b = labels[idx[0]], labels[idx[1]]
            raise AmbiguityError(
                f"rendered colors of {a[0]}/{a[1]} and {b[0]}/{b[1]} are {dmin:.4f} apart (< {tau})"
            )
        return dmin

    def to_json(self) -> str:
        doc = {
            "level": self.level,
            "background": rgb_to_hex(self.background),
            "entries": {
                name: {"color": rgb_to_hex(e.color), "alpha": e.alpha, "layer": e.layer}
                for name, e in sorted(self.entries.items())
            },
        }
        return json.dumps(doc, indent=2)

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def palette_from_dict(doc: dict) -> Palette:
    entries = {
        name: (spec["color"], float(spec.get("alpha", HOUSEHOLD_ALPHA)), int(spec.get("layer", FURNITURE_LAYER)))
        for name, spec in doc["entries"].items()
    }
    return Palette(entries, level=doc.get("level", "house"), background=doc.get("background", "FFFFFF"))


def load_palette(path) -> Palette:
    """Load a palette from a .json or .toml file."""
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text.decode("utf-8"))
    else:
        doc = json.loads(text)
    return palette_from_dict(doc)


def save_palette(palette: Palette, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(palette.to_json())


_HOUSE_ITEMS = {
    "bed": "FF0000",
    "cabinet": "FFFF00",
    "bed_background": "FF3333",
    "bedside_table": "F08080",
    "table": "A52A2A",
    "leisure_sofa": "666600",
    "sofa": "FF9933",
    "tv_cabinet": "FFCC99",
    "sofa_background": "99004C",
    "coffee_table": "CCFF99",
    "dining_cabinet": "FF9999",
    "shoe_cabinet": "006633",
    "single_sofa": "CC6600",
    "dining_table": "FF6666",
    "side_coffee_table": "99FFCC",
    "single_door_floor_cabinet": "9999FF",
    "double_door_floor_cabinet": "6666FF",
    "cooker_cabinet": "000099",
    "sink_cabinet": "0000CC",
    "electrical_floor_cabinet": "3333FF",
    "refrigerator": "006666",
    "shower": "33FF99",
    "toilet": "660033",
    "washbasin": "CC0066",
    "washing_machine": "FFCCE5",
    "washing_set": "FF66B2",
}

_FINE_ITEMS = {
    "bedside_table": "F08080",
    "table": "A52A2A",
    "coffee_table": "CCFF99",
    "side_coffee_table": "99FFCC",
    "dining_table": "FF6666",
    "lying_book": "0000FF",
    "standing_book": "FFFFAA",
    "magazine": "7FFFAA",
    "all_in_one_computer": "00FFAA",
    "laptop": "FF7FAA",
    "big_mouse_pad": "7F7FAA",
    "table_lamp": "007FAA",
    "small_ornament": "FF00AA",
    "pen_holder": "7F00AA",
    "big_plant": "0000AA",
    "small_plant": "FFFF55",
    "coffee_cup": "7FFF55",
    "electronic": "FF0000",
    "photo_frame": "FF7F55",
    "food": "7F7F55",
    "dinner_set": "FFFF00",
    "drinks": "7F7F00",
}

# Parent surfaces whose tops can host a fine-grained layout.
FINE_PARENT_CATEGORIES = frozenset(
    {"table", "coffee_table", "side_coffee_table", "dining_table", "bedside_table"}
)


def default_house_palette() -> Palette:
    entries: dict[str, tuple[str, float, int]] = {
        name: (color, HOUSEHOLD_ALPHA, FURNITURE_LAYER) for name, color in _HOUSE_ITEMS.items()
    }
    entries["wall"] = ("000000", 1.0, WALL_LAYER)
    entries["door"] = ("139C5A", 1.0, DOOR_LAYER)
    entries["window"] = ("0000FF", 1.0, WINDOW_LAYER)
    return Palette(entries, level="house")


def default_fine_palette() -> Palette:
    entries = {name: (color, HOUSEHOLD_ALPHA, FURNITURE_LAYER) for name, color in _FINE_ITEMS.items()}
    return Palette(entries, level="fine")


# Gray fill codes for room types in open-plan condition images. Code 0 is the
# house outline ("out_room") and is never filled.
ROOM_TYPE_GRAYS: dict[int, float] = {code: round(0.24 + 0.06 * (code - 1), 4) for code in range(1, 11)}


def room_type_gray(room_type: int) -> float | None:
    return ROOM_TYPE_GRAYS.get(room_type)


def gray_to_room_type(gray: float, tol: float = 0.02) -> int | None:
    for code, g in ROOM_TYPE_GRAYS.items():
        if abs(gray - g) <= tol:
            return code
    return None
