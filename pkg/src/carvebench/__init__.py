"""Seam-carving retargeting with pluggable importance maps, and automatic
retargeting quality scores (mean area ratio, mean shape distance)."""

__version__ = "0.1.0"

from ._accel import backend
from .carve import (
    CarveResult,
    Seam,
    carve_to_height,
    carve_to_width,
    make_it_square,
    optimal_vertical_seam,
    remove_seam,
    remove_seam_mask,
    validate_seam,
)
from .importance import ImportanceSource, gradient_l1_map, importance_for, parse_source, sobel_map
from .metrics import area_ratio, extract_shape_points, match_shapes, mssd_pair, pearson_cc, shape_context, ssd
from .raster import BinaryMask, GrayMap, RasterImage, load_image, load_mask, save_image, to_grayscale, transpose

__all__ = [
    "BinaryMask",
    "CarveResult",
    "GrayMap",
    "ImportanceSource",
    "RasterImage",
    "Seam",
    "area_ratio",
    "backend",
    "carve_to_height",
    "carve_to_width",
    "extract_shape_points",
    "gradient_l1_map",
    "importance_for",
    "load_image",
    "load_mask",
    "make_it_square",
    "match_shapes",
    "mssd_pair",
    "optimal_vertical_seam",
    "parse_source",
    "pearson_cc",
    "remove_seam",
    "remove_seam_mask",
    "save_image",
    "shape_context",
    "sobel_map",
    "ssd",
    "to_grayscale",
    "transpose",
    "validate_seam",
]
