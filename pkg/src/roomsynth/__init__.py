"""Collision-free indoor layout synthesis toolkit."""

__version__ = "0.1.0"

from .scene import (  # noqa: F401
    Opening,
    OrientedBox,
    Room,
    Scene,
    SceneError,
    SceneParseError,
    SceneSchemaError,
    SceneTypeError,
    ValidationReport,
    load_scene,
    parse_scene,
    save_scene,
    serialize_scene,
    validate_scene,
)
from .palette import (  # noqa: F401
    AmbiguityError,
    Palette,
    PaletteError,
    default_fine_palette,
    default_house_palette,
    load_palette,
    save_palette,
)
from .toygen import PlacementError, ToyConfig, generate_toy_corpus, generate_toy_scene  # noqa: F401
from .raster import (  # noqa: F401
    LayoutImage,
    TransformError,
    WorldTransform,
    fit_transform,
    load_png,
    rasterize_floorplan,
    rasterize_layout,
    rasterize_parent_boundary,
    save_png,
)
from .metrics import (  # noqa: F401
    CorpusMetrics,
    SceneMetrics,
    corpus_metrics,
    footprint_intersection_area,
    footprint_iou,
    scene_metrics,
    scene_piou,
    scene_por,
)
