"""Seam-carving engine: optimal seams, removal, lockstep carving, Make-It-Square."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels
from .importance import ImportanceSource, importance_for
from .raster import BinaryMask, GrayMap, RasterImage, transpose

log = logging.getLogger(__name__)

VERTICAL = "vertical"
TRANSPOSED = "transposed"


class InvalidSeam(ValueError):
    pass


class CarveError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Seam:
    """Vertical 8-connected path: ``columns[i]`` is the column removed in row ``i``."""

    columns: np.ndarray
    cost: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        cols = np.array(self.columns, dtype=np.int64).reshape(-1)
        cols.flags.writeable = False
        object.__setattr__(self, "columns", cols)

    def __len__(self):
        return len(self.columns)

    def __eq__(self, other):
        if not isinstance(other, Seam):
            return NotImplemented
        return np.array_equal(self.columns, other.columns)

    def tolist(self) -> list[int]:
        return self.columns.tolist()


def validate_seam(columns, width: int, height: int | None = None) -> None:
    """Raise InvalidSeam unless ``columns`` is a legal vertical seam for a ``width``-wide image.

    Checks one entry per row (when ``height`` is given), every column in
    ``[0, width)``, and adjacent rows at most one column apart.
    """
    cols = np.asarray(columns.columns if isinstance(columns, Seam) else columns)
    if cols.ndim != 1 or cols.size == 0:
        raise InvalidSeam("seam must be a non-empty 1-D sequence of columns")
    if not np.issubdtype(cols.dtype, np.integer):
        raise InvalidSeam(f"seam columns must be integers, got {cols.dtype}")
    if height is not None and cols.size != height:
        raise InvalidSeam(f"seam has {cols.size} rows, image has {height}")
    if cols.min() < 0 or cols.max() >= width:
        raise InvalidSeam(f"seam leaves the image: columns span [{cols.min()}, {cols.max()}], width {width}")
    if cols.size > 1 and np.abs(np.diff(cols)).max() > 1:
        row = int(np.argmax(np.abs(np.diff(cols)) > 1)) + 1
        raise InvalidSeam(f"seam jumps more than one column at row {row}")


def seam_cost(energy, seam) -> float:
    """Sum of ``energy`` along ``seam``, accumulated top to bottom."""
    values = energy.values if isinstance(energy, GrayMap) else np.asarray(energy, dtype=np.float64)
    cols = seam.columns if isinstance(seam, Seam) else np.asarray(seam)
    total = 0.0
    for i, j in enumerate(cols):
        total += values[i, j]
    return total


def optimal_vertical_seam(energy) -> Seam:
    """Globally cheapest vertical seam through an importance map.

    Ties go to the smaller column, both when choosing a parent and when
    picking the end of the path in the last row.
    """
    values = energy.values if isinstance(energy, GrayMap) else np.asarray(energy, dtype=np.float64)
    if values.ndim != 2 or 0 in values.shape:
        raise ValueError(f"expected a non-empty 2-D map, got shape {values.shape}")
    cols, total = kernels.seam_dp(values)
    return Seam(cols, total)


def _check_removable(shape, seam: Seam):
    h, w = shape[:2]
    if w < 2:
        raise CarveError("cannot remove a seam from a one-column image")
    validate_seam(seam, w, h)


def remove_seam(img: RasterImage, seam: Seam) -> RasterImage:
    _check_removable(img.data.shape, seam)
    return RasterImage(kernels.remove_seam(img.data, seam.columns))


def remove_seam_mask(mask: BinaryMask, seam: Seam) -> BinaryMask:
    _check_removable(mask.salient.shape, seam)
    return BinaryMask(kernels.remove_seam(mask.salient, seam.columns))


def remove_seam_map(gmap: GrayMap, seam: Seam) -> GrayMap:
    _check_removable(gmap.values.shape, seam)
    return GrayMap(kernels.remove_seam(gmap.values, seam.columns))


@dataclass(frozen=True)
class CarveResult:
    image: RasterImage
    mask: BinaryMask | None
    seams: list[Seam]
    orientation: str = VERTICAL

    def __post_init__(self):
        if self.mask is not None and self.mask.shape != self.image.shape:
            raise ValueError("carved mask and image disagree in size")


def carve_to_width(
    img: RasterImage,
    mask: BinaryMask | None,
    src: ImportanceSource,
    target_width: int,
    *,
    static: bool = False,
    importance: GrayMap | None = None,
) -> CarveResult:
    """Remove vertical seams one at a time until the image is ``target_width`` wide.

    Sobel and gradient maps are recomputed from the current image after each
    removal unless ``static`` is set. External and ground-truth maps are
    computed once and carved with the same seams as the image. ``importance``
    supplies that fixed map directly, which skips the source lookup.
    """
    if not 1 <= target_width <= img.width:
        raise CarveError(f"target width {target_width} outside [1, {img.width}]")
    if mask is not None and mask.shape != img.shape:
        raise CarveError(f"mask is {mask.width}x{mask.height}, image is {img.width}x{img.height}")

    recompute = src.derived and not static and importance is None
    fixed = None
    if not recompute:
        fixed = importance if importance is not None else importance_for(img, mask, src)
        if fixed.shape != img.shape:
            raise CarveError("importance map and image disagree in size")

    seams = []
    for _ in range(img.width - target_width):
        energy = importance_for(img, mask, src) if recompute else fixed
        seam = optimal_vertical_seam(energy)
        img = remove_seam(img, seam)
        if mask is not None:
            mask = remove_seam_mask(mask, seam)
        if fixed is not None:
            fixed = remove_seam_map(fixed, seam)
        seams.append(seam)
        log.debug("removed seam %d (cost %.6g), width now %d", len(seams), seam.cost, img.width)
    return CarveResult(img, mask, seams, VERTICAL)


def carve_to_height(img, mask, src, target_height, *, static=False, importance=None) -> CarveResult:
    """Reduce height by carving the transposed image; seams are in the transposed frame."""
    tmap = transpose(importance) if importance is not None else None
    if tmap is None and not (src.derived and not static):
        tmap = transpose(importance_for(img, mask, src))
    res = carve_to_width(
        transpose(img),
        transpose(mask) if mask is not None else None,
        src,
        target_height,
        static=static,
        importance=tmap,
    )
    return CarveResult(
        transpose(res.image),
        transpose(res.mask) if res.mask is not None else None,
        res.seams,
        TRANSPOSED,
    )


def make_it_square(img: RasterImage, mask: BinaryMask | None, src: ImportanceSource, *, static=False) -> CarveResult:
    """Carve the longer side down to the shorter one.

    Landscape images lose ``width - height`` vertical seams; portrait images are
    transposed, carved the same way and transposed back.
    """
    if img.width >= img.height:
        return carve_to_width(img, mask, src, img.height, static=static)
    return carve_to_height(img, mask, src, img.width, static=static)


def original_columns(seams: Iterable[Seam], height: int, width: int) -> list[np.ndarray]:
    """Map seams recorded in the shrinking frame back to original-image columns."""
    index = np.tile(np.arange(width, dtype=np.int64), (height, 1))
    rows = np.arange(height)
    out = []
    for seam in seams:
        out.append(index[rows, seam.columns].copy())
        index = kernels.remove_seam(index, seam.columns)
    return out


@dataclass(frozen=True)
class TraceSection:
    """Seams of one carve, with the size of the frame they were removed from."""

    orientation: str
    width: int
    height: int
    seams: list[Seam]

    @classmethod
    def from_result(cls, res: CarveResult, width: int, height: int) -> "TraceSection":
        """``width``/``height`` are the pre-carve size in the seams' own frame."""
        return cls(res.orientation, width, height, list(res.seams))


def format_seam_trace(sections: Iterable[TraceSection]) -> str:
    """One header line per carve, then one line per removal: comma-separated columns, top row first."""
    lines = []
    for sec in sections:
        lines.append(f"# orientation={sec.orientation} width={sec.width} height={sec.height}")
        lines += [",".join(map(str, seam.columns.tolist())) for seam in sec.seams]
    return "\n".join(lines) + "\n"


def write_seam_trace(path, sections: Iterable[TraceSection]) -> None:
    Path(path).write_text(format_seam_trace(sections))


def parse_seam_trace(text: str) -> list[TraceSection]:
    sections = []
    header = None
    seams: list[Seam] = []

    def flush():
        if header is not None:
            sections.append(
                TraceSection(header.get("orientation", VERTICAL), int(header["width"]), int(header["height"]), seams)
            )

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            flush()
            header = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            if "width" not in header or "height" not in header:
                raise ValueError(f"line {lineno}: section header needs width= and height=")
            seams = []
            continue
        if header is None:
            raise ValueError(f"line {lineno}: seam before any section header")
        try:
            seams.append(Seam([int(tok) for tok in line.split(",")]))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed seam {line!r}") from None
    flush()
    return sections


def read_seam_trace(path) -> list[TraceSection]:
    return parse_seam_trace(Path(path).read_text())


def validate_trace(section: TraceSection) -> None:
    """Check every seam of a carve against the width current at its removal."""
    for k, seam in enumerate(section.seams):
        try:
            validate_seam(seam, section.width - k, section.height)
        except InvalidSeam as exc:
            raise InvalidSeam(f"seam {k}: {exc}") from None
