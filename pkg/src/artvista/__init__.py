"""artvista: paint-by-number templates, leveled sketches, and a painting
service for raster images."""

__version__ = "0.1.0"

from .colorquant import (  # noqa: F401
    IndexMap,
    LabColor,
    Palette,
    PaletteEntry,
    cielab_to_srgb,
    quantize_colors,
    srgb_to_cielab,
)
from .raster import RasterImage, downscale_for_analysis, load_image  # noqa: F401
from .regionizer import (  # noqa: F401
    Contour,
    PbnTemplate,
    Region,
    RegionMap,
    build_template,
    compute_label_anchor,
    label_regions,
    merge_small_regions,
    simplify_contour,
    trace_boundaries,
)
from .sketcher import Sketch, canny_edges, generate_sketch, xdog_lineart  # noqa: F401
