"""Batch Make-It-Square evaluation over image/mask datasets, plus report I/O."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .carve import make_it_square
from .importance import EXTERNAL, ImportanceSource
from .metrics import DEFAULT_POINTS, EmptyGroundTruth, ShapeDegenerate, area_ratio, mssd_pair, pearson_cc
from .raster import DEFAULT_MASK_THRESHOLD, load_image, load_mask

log = logging.getLogger(__name__)

CSV_COLUMNS = ("id", "orig_w", "orig_h", "target_w", "target_h", "area_ratio", "ssd", "excluded", "seconds")
CORRELATION_LABELS = ("User Ratings", "MAR", "- MSSD")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    image: Path
    mask: Path


def scan_dataset(directory, image_suffix: str = ".jpg", mask_suffix: str = ".png") -> list[DatasetEntry]:
    """Pair ``<stem><image_suffix>`` with ``<stem><mask_suffix>``, sorted by stem."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"dataset directory not found: {directory}")
    if image_suffix == mask_suffix:
        raise DatasetError("image and mask suffixes must differ")
    images, masks = {}, {}
    for path in directory.iterdir():
        if not path.is_file():
            continue
        # check the longer suffix first so ".mask.png" wins over ".png"
        for suffix, bucket in sorted(((image_suffix, images), (mask_suffix, masks)), key=lambda t: -len(t[0])):
            if path.name.endswith(suffix) and len(path.name) > len(suffix):
                bucket[path.name[: -len(suffix)]] = path
                break
    entries = []
    for stem in sorted(set(images) | set(masks)):
        if stem not in masks:
            log.warning("skipping %s: no mask %s%s", stem, stem, mask_suffix)
        elif stem not in images:
            log.warning("skipping %s: no image %s%s", stem, stem, image_suffix)
        else:
            entries.append(DatasetEntry(stem, images[stem], masks[stem]))
    if not entries:
        raise DatasetError(f"no {image_suffix}/{mask_suffix} pairs found in {directory}")
    return entries


@dataclass(frozen=True)
class EvalRow:
    id: str
    orig_w: int
    orig_h: int
    target_w: int
    target_h: int
    area_ratio: float | None
    ssd: float | None
    excluded: str = ""
    seconds: float = 0.0

    @property
    def is_excluded(self) -> bool:
        return bool(self.excluded)


@dataclass
class EvalReport:
    source: str
    rows: list[EvalRow] = field(default_factory=list)

    @property
    def n_images(self) -> int:
        return len(self.rows)

    @property
    def n_excluded(self) -> int:
        return sum(r.is_excluded for r in self.rows)

    @property
    def mar(self) -> float | None:
        vals = [r.area_ratio for r in self.rows if r.area_ratio is not None]
        return math.fsum(vals) / len(vals) if vals else None

    @property
    def mssd(self) -> float | None:
        vals = [r.ssd for r in self.rows if r.ssd is not None]
        return math.fsum(vals) / len(vals) if vals else None

    def aggregate(self) -> dict:
        return {
            "source": self.source,
            "n_images": self.n_images,
            "n_excluded": self.n_excluded,
            "mar": self.mar,
            "mssd": self.mssd,
        }


def _entry_source(src: ImportanceSource, entry: DatasetEntry, map_suffix: str) -> ImportanceSource:
    # an external directory holds one map per dataset id
    if src.kind == EXTERNAL and src.path.is_dir():
        return ImportanceSource.external(src.path / f"{entry.id}{map_suffix}")
    return src


def evaluate_entry(
    entry: DatasetEntry,
    src: ImportanceSource,
    n_points: int = DEFAULT_POINTS,
    *,
    map_suffix: str = ".png",
    mask_threshold: float = DEFAULT_MASK_THRESHOLD,
    static: bool = False,
) -> EvalRow:
    t0 = time.perf_counter()
    try:
        img = load_image(entry.image)
        gt = load_mask(entry.mask, mask_threshold)
        if gt.shape != img.shape:
            raise DatasetError(f"mask is {gt.width}x{gt.height}, image is {img.width}x{img.height}")
        res = make_it_square(img, gt, _entry_source(src, entry, map_suffix), static=static)
    except (OSError, ValueError) as exc:
        log.warning("%s: %s", entry.id, exc)
        return EvalRow(entry.id, 0, 0, 0, 0, None, None, f"error: {exc}", time.perf_counter() - t0)

    reasons = []
    ratio = ssd_value = None
    try:
        ratio = area_ratio(gt, res.mask)
    except EmptyGroundTruth:
        reasons.append("empty_gt")
    if ratio is not None:
        try:
            ssd_value = mssd_pair(gt, res.mask, n_points)
        except ShapeDegenerate:
            reasons.append("degenerate_shape")
    if reasons:
        log.warning("%s: excluded (%s)", entry.id, ", ".join(reasons))
    row = EvalRow(
        entry.id,
        img.width,
        img.height,
        res.image.width,
        res.image.height,
        ratio,
        ssd_value,
        ";".join(reasons),
        time.perf_counter() - t0,
    )
    log.info(
        "%s %dx%d -> %dx%d area_ratio=%s ssd=%s",
        entry.id, row.orig_w, row.orig_h, row.target_w, row.target_h, row.area_ratio, row.ssd,
    )
    return row


def evaluate_dataset(
    entries: Sequence[DatasetEntry],
    src: ImportanceSource,
    n_points: int = DEFAULT_POINTS,
    *,
    threads: int | None = 1,
    label: str | None = None,
    **kwargs,
) -> EvalReport:
    """Make-It-Square every entry with lockstep mask carving and score it.

    Per-entry failures become excluded rows. Rows are ordered by id whatever
    the thread count.
    """
    if not entries:
        raise DatasetError("no dataset entries to evaluate")
    threads = threads or os.cpu_count() or 1

    def run(entry):
        return evaluate_entry(entry, src, n_points, **kwargs)

    if threads == 1:
        rows = [run(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, entries))
    rows.sort(key=lambda r: r.id)
    return EvalReport(label or src.label, rows)


# --------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(report: EvalReport, path, *, timing: bool = False) -> None:
    """Per-image rows; ``seconds`` is left blank unless ``timing`` so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [
                    r.id,
                    r.orig_w,
                    r.orig_h,
                    r.target_w,
                    r.target_h,
                    _fmt(r.area_ratio),
                    _fmt(r.ssd),
                    r.excluded,
                    _fmt(r.seconds) if timing else "",
                ]
            )


def read_rows_csv(path) -> list[EvalRow]:
    def opt(text):
        return float(text) if text != "" else None

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            EvalRow(
                rec["id"],
                int(rec["orig_w"]),
                int(rec["orig_h"]),
                int(rec["target_w"]),
                int(rec["target_h"]),
                opt(rec["area_ratio"]),
                opt(rec["ssd"]),
                rec["excluded"],
                opt(rec["seconds"]) or 0.0,
            )
            for rec in reader
        ]


def write_aggregate_json(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.aggregate(), indent=2) + "\n")


def read_aggregate_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    missing = {"source", "mar", "mssd"} - set(data)
    if missing:
        raise DatasetError(f"{path}: aggregate JSON lacks {sorted(missing)}")
    return data


def read_ratings_csv(path) -> dict[str, float]:
    """``method,rating`` rows (header optional) into an ordered mapping."""
    ratings = {}
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if lineno == 1 and rec[0].strip().lower() == "method":
                continue
            if len(rec) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'method,rating', got {rec}")
            try:
                ratings[rec[0].strip()] = float(rec[1])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: rating {rec[1]!r} is not a number") from None
    return ratings


def read_metric_table(path) -> dict[str, dict[str, float]]:
    """``method,mar,mssd`` CSV, one row per importance source."""
    table = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"method", "mar", "mssd"} <= set(reader.fieldnames):
            raise DatasetError(f"{path}: expected columns method,mar,mssd")
        for rec in reader:
            try:
                table[rec["method"].strip()] = {"mar": float(rec["mar"]), "mssd": float(rec["mssd"])}
            except (TypeError, ValueError):
                raise DatasetError(f"{path}: bad row {rec}") from None
    return table


def published_table_paths() -> tuple[Path, Path]:
    """Bundled six-method metric table and user ratings."""
    base = resources.files("carvebench") / "data"
    return Path(str(base / "published_metrics.csv")), Path(str(base / "published_ratings.csv"))


# --------------------------------------------------------------------------
# correlation analysis


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray
    methods: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    def cell(self, a: str, b: str) -> float:
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def format(self, digits: int = 3) -> str:
        width = max(len(lab) for lab in self.labels) + 2
        lines = [" " * width + "".join(f"{lab:>{width}}" for lab in self.labels)]
        for lab, row in zip(self.labels, self.values):
            lines.append(f"{lab:<{width}}" + "".join(f"{v:>{width}.{digits}f}" for v in row))
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def correlate_reports(mar: Sequence[float], mssd: Sequence[float], ratings: Sequence[float]) -> np.ndarray:
    """Pearson matrix over (ratings, MAR, -MSSD); MSSD is negated so larger is better for all three."""
    cols = [np.asarray(ratings, float), np.asarray(mar, float), -np.asarray(mssd, float)]
    lengths = {len(c) for c in cols}
    if len(lengths) != 1:
        raise ValueError(f"columns differ in length: ratings {len(cols[0])}, MAR {len(cols[1])}, MSSD {len(cols[2])}")
    out = np.eye(3)
    for i in range(3):
        for j in range(i + 1, 3):
            out[i, j] = out[j, i] = pearson_cc(cols[i], cols[j])
    return out


def _published_decimals(values, max_decimals: int = 6) -> int | None:
    for d in range(max_decimals + 1):
        if all(abs(round(v, d) - v) < 1e-12 for v in values):
            return d
    return None


def rounding_note(name: str, values: Sequence[float], threshold: int = 100) -> str | None:
    """Warn when a column's spread is only a few units of its last printed decimal."""
    d = _published_decimals(values)
    if d is None:
        return None
    units = round((max(values) - min(values)) * 10**d)
    if units >= threshold:
        return None
    return (
        f"{name} values are given to {d} decimals and span only {units} units of the last decimal; "
        f"correlations involving {name} are sensitive to that rounding and should be read as indicative"
    )


def correlate_methods(metrics: dict[str, dict[str, float]], ratings: dict[str, float]) -> CorrelationMatrix:
    """Align per-method metrics with ratings by method label and correlate them."""
    if set(metrics) != set(ratings):
        only_m = sorted(set(metrics) - set(ratings))
        only_r = sorted(set(ratings) - set(metrics))
        raise DatasetError(f"method columns do not line up: metrics only {only_m}, ratings only {only_r}")
    methods = [m for m in ratings if m in metrics]
    mar = [metrics[m]["mar"] for m in methods]
    mssd = [metrics[m]["mssd"] for m in methods]
    for name, col in (("MAR", mar), ("MSSD", mssd)):
        if any(v is None for v in col):
            raise DatasetError(f"{name} missing for some methods")
    values = correlate_reports(mar, mssd, [ratings[m] for m in methods])
    notes = tuple(n for n in (rounding_note("MSSD", mssd), rounding_note("MAR", mar)) if n)
    return CorrelationMatrix(CORRELATION_LABELS, values, tuple(methods), notes)


def metrics_from_aggregates(paths: Iterable) -> dict[str, dict[str, float]]:
    out = {}
    for path in paths:
        agg = read_aggregate_json(path)
        out[str(agg["source"])] = {"mar": agg["mar"], "mssd": agg["mssd"]}
    return out
