"""Importance maps: built-in gradient detectors and externally supplied maps."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .raster import BinaryMask, GrayMap, RasterImage, load_gray, to_grayscale

SOBEL = "sobel"
GRADIENT_L1 = "grad"
EXTERNAL = "external"
GROUND_TRUTH = "mask"
_KINDS = (SOBEL, GRADIENT_L1, EXTERNAL, GROUND_TRUTH)


class DimensionMismatch(ValueError):
    pass


class MissingMaskError(ValueError):
    pass


@dataclass(frozen=True)
class ImportanceSource:
    kind: str
    path: Path | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown importance source {self.kind!r}")
        if (self.kind == EXTERNAL) != (self.path is not None):
            raise ValueError("a path is required for, and only for, external sources")
        if self.path is not None:
            object.__setattr__(self, "path", Path(self.path))

    @property
    def derived(self) -> bool:
        """True for sources recomputed from the pixels themselves."""
        return self.kind in (SOBEL, GRADIENT_L1)

    @property
    def label(self) -> str:
        if self.kind == EXTERNAL:
            return f"{EXTERNAL}:{self.path}"
        return self.kind

    @classmethod
    def sobel(cls):
        return cls(SOBEL)

    @classmethod
    def gradient_l1(cls):
        return cls(GRADIENT_L1)

    @classmethod
    def ground_truth(cls):
        return cls(GROUND_TRUTH)

    @classmethod
    def external(cls, path):
        return cls(EXTERNAL, Path(path))


def parse_source(text: str) -> ImportanceSource:
    """Parse the command-line spelling: ``sobel``, ``grad``, ``mask`` or ``external:<path>``."""
    text = text.strip()
    if text.startswith(EXTERNAL + ":"):
        path = text[len(EXTERNAL) + 1 :]
        if not path:
            raise ValueError("external source needs a path, e.g. external:maps/cat.png")
        return ImportanceSource.external(path)
    if text in (SOBEL, GRADIENT_L1, GROUND_TRUTH):
        return ImportanceSource(text)
    raise ValueError(f"unknown importance source {text!r} (expected sobel, grad, mask or external:<path>)")


def normalize_max(values: np.ndarray) -> GrayMap:
    """Divide by the maximum; an all-zero map stays all zero."""
    peak = values.max()
    if peak > 0:
        values = values / peak
    return GrayMap(values)


def sobel_map(img: RasterImage) -> GrayMap:
    return normalize_max(kernels.sobel_magnitude(to_grayscale(img).values))


def gradient_l1_map(img: RasterImage) -> GrayMap:
    return normalize_max(kernels.gradient_l1(to_grayscale(img).values))


def mask_map(mask: BinaryMask) -> GrayMap:
    return GrayMap(mask.salient.astype(np.float64))


def importance_for(img: RasterImage, mask: BinaryMask | None, src: ImportanceSource) -> GrayMap:
    if src.kind == SOBEL:
        return sobel_map(img)
    if src.kind == GRADIENT_L1:
        return gradient_l1_map(img)
    if src.kind == GROUND_TRUTH:
        if mask is None:
            raise MissingMaskError("the 'mask' importance source needs a ground-truth mask")
        if mask.shape != img.shape:
            raise DimensionMismatch(f"mask is {mask.width}x{mask.height}, image is {img.width}x{img.height}")
        return mask_map(mask)
    gmap = load_gray(src.path)
    if gmap.shape != img.shape:
        raise DimensionMismatch(
            f"importance map {src.path} is {gmap.width}x{gmap.height}, image is {img.width}x{img.height}"
        )
    return gmap
