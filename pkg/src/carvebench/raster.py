"""Pixel-grid types, grayscale conversion, transpose and file I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luma
LUMA = np.array([0.299, 0.587, 0.114])
DEFAULT_MASK_THRESHOLD = 127


class RasterIOError(OSError):
    """Base class for image file problems."""


class ImageNotFound(RasterIOError, FileNotFoundError):
    pass


class ImageDecodeError(RasterIOError):
    pass


class EmptyImageError(RasterIOError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable or not arr.flags.c_contiguous:
        arr = np.array(arr, order="C")
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit RGB image stored as an (height, width, 3) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if data.dtype != np.uint8:
            raise TypeError(f"expected uint8 pixels, got {data.dtype}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 3

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    @classmethod
    def from_gray(cls, values) -> "RasterImage":
        """Replicate a 2-D uint8 array (or [0,1] floats) into three channels."""
        values = np.asarray(values)
        if values.dtype != np.uint8:
            values = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
        return cls(np.repeat(values[:, :, None], 3, axis=2))


@dataclass(frozen=True, eq=False)
class GrayMap:
    """Real-valued (height, width) map with every value in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"expected non-empty 2-D array, got shape {values.shape}")
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise ValueError("GrayMap values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, GrayMap):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean (height, width) salient-region mask."""

    salient: np.ndarray

    def __post_init__(self):
        salient = np.asarray(self.salient)
        if salient.ndim != 2 or salient.shape[0] < 1 or salient.shape[1] < 1:
            raise ValueError(f"expected non-empty 2-D array, got shape {salient.shape}")
        object.__setattr__(self, "salient", _frozen(salient.astype(bool)))

    @property
    def height(self) -> int:
        return self.salient.shape[0]

    @property
    def width(self) -> int:
        return self.salient.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.salient.shape

    def count(self) -> int:
        return int(self.salient.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.salient, other.salient)


def to_grayscale(img: RasterImage) -> GrayMap:
    gray = img.data.astype(np.float64) @ LUMA / 255.0
    # weighted sums can land one ulp outside [0, 1]
    return GrayMap(np.clip(gray, 0.0, 1.0))


def transpose(img):
    """Swap rows and columns of a RasterImage, GrayMap or BinaryMask."""
    if isinstance(img, RasterImage):
        return RasterImage(img.data.transpose(1, 0, 2))
    if isinstance(img, GrayMap):
        return GrayMap(img.values.T)
    if isinstance(img, BinaryMask):
        return BinaryMask(img.salient.T)
    raise TypeError(f"cannot transpose {type(img).__name__}")


def _open(path) -> Image.Image:
    path = Path(path)
    if not path.is_file():
        raise ImageNotFound(f"no such image file: {path}")
    try:
        im = Image.open(path)
        im.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
    if im.width < 1 or im.height < 1:
        raise EmptyImageError(f"zero-sized image: {path}")
    return im


def load_image(path) -> RasterImage:
    return RasterImage(np.asarray(_open(path).convert("RGB")))


def load_gray(path) -> GrayMap:
    """Load any image as luminance scaled to [0, 1]."""
    return to_grayscale(load_image(path))


def load_mask(path, threshold: float = DEFAULT_MASK_THRESHOLD) -> BinaryMask:
    """A pixel is salient iff its 0-255 luminance exceeds ``threshold``."""
    im = _open(path)
    if im.mode == "1":
        im = im.convert("L")
    if im.mode in ("L", "I", "I;16", "F"):
        lum = np.asarray(im.convert("F"), dtype=np.float64)
    else:
        lum = np.asarray(im.convert("RGB"), dtype=np.float64) @ LUMA
    return BinaryMask(lum > threshold)


def save_image(img: RasterImage, path) -> None:
    Image.fromarray(np.asarray(img.data)).save(Path(path))


def save_mask(mask: BinaryMask, path) -> None:
    Image.fromarray(np.where(mask.salient, 255, 0).astype(np.uint8), mode="L").save(Path(path))


def save_gray(gmap: GrayMap, path) -> None:
    Image.fromarray(np.round(gmap.values * 255.0).astype(np.uint8), mode="L").save(Path(path))
