"""carvebench command line: retarget, square, evaluate, correlate.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data error.
Log level comes from ``CARVEBENCH_LOG`` (default INFO).
"""
from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
from pathlib import Path

from . import __version__, _accel
from .bench import (
    DatasetError,
    correlate_methods,
    evaluate_dataset,
    metrics_from_aggregates,
    published_table_paths,
    read_metric_table,
    read_ratings_csv,
    scan_dataset,
    write_aggregate_json,
    write_rows_csv,
)
from .carve import (
    CarveError,
    TraceSection,
    carve_to_height,
    carve_to_width,
    make_it_square,
    remove_seam_map,
    write_seam_trace,
)
from .importance import importance_for, parse_source
from .raster import DEFAULT_MASK_THRESHOLD, load_image, load_mask, save_image, save_mask

log = logging.getLogger("carvebench")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _source(text):
    try:
        return parse_source(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_carve_io(p):
    p.add_argument("--input", "-i", required=True, type=Path, help="image to retarget (PNG or JPEG)")
    p.add_argument("--out", "-o", required=True, type=Path, help="output image path")
    p.add_argument(
        "--importance",
        default="sobel",
        type=_source,
        help="sobel | grad | mask | external:<path> (default: sobel)",
    )
    p.add_argument("--mask", type=Path, help="ground-truth mask to carve in lockstep")
    p.add_argument("--mask-out", type=Path, help="where to write the carved mask (default: <out>.mask.png)")
    p.add_argument("--mask-threshold", type=float, default=DEFAULT_MASK_THRESHOLD)
    p.add_argument("--emit-seams", type=Path, help="write the removed seams as a text trace")
    p.add_argument("--static", action="store_true", help="compute derived importance maps once instead of per seam")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carvebench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_accel.backend()})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("retarget", help="shrink an image to a given width and/or height")
    _add_carve_io(p)
    p.add_argument("--width", type=_positive, help="target width in pixels")
    p.add_argument("--height", type=_positive, help="target height in pixels")
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("square", help="Make-It-Square: carve the longer side down to the shorter")
    _add_carve_io(p)
    p.set_defaults(func=cmd_square)

    p = sub.add_parser("evaluate", help="Make-It-Square a dataset and compute MAR / MSSD")
    p.add_argument("--dataset", "-d", required=True, type=Path, help="directory of image/mask pairs")
    p.add_argument("--importance", default="sobel", type=_source,
                   help="sobel | grad | mask | external:<file or directory of per-image maps>")
    p.add_argument("--out-csv", required=True, type=Path)
    p.add_argument("--out-json", required=True, type=Path)
    p.add_argument("--label", help="source label written to the JSON (default: the importance spelling)")
    p.add_argument("--n-points", type=_positive, default=100, help="boundary points per shape (default 100)")
    p.add_argument("--threads", type=_positive, default=None, help="worker threads (default: all cores)")
    p.add_argument("--image-suffix", default=".jpg")
    p.add_argument("--mask-suffix", default=".png")
    p.add_argument("--map-suffix", default=".png", help="suffix of per-image files in an external map directory")
    p.add_argument("--mask-threshold", type=float, default=DEFAULT_MASK_THRESHOLD)
    p.add_argument("--static", action="store_true")
    p.add_argument("--timing", action="store_true", help="fill the seconds column (makes output run-dependent)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", help="Pearson correlations between ratings, MAR and -MSSD")
    p.add_argument("aggregates", nargs="*", type=Path,
                   help="aggregate JSON files from 'evaluate', one per importance source")
    p.add_argument("--table", type=Path, action="append", default=[],
                   help="CSV with columns method,mar,mssd (repeatable)")
    p.add_argument("--ratings", type=Path, help="CSV with columns method,rating")
    p.add_argument("--published-table", action="store_true",
                   help="use the bundled six-method metric table and ratings")
    p.add_argument("--digits", type=int, default=3)
    p.set_defaults(func=cmd_correlate)
    return parser


def _mask_out(args) -> Path:
    return args.mask_out or args.out.with_name(args.out.stem + ".mask.png")


def _load_inputs(args):
    img = load_image(args.input)
    mask = load_mask(args.mask, args.mask_threshold) if args.mask else None
    return img, mask


def _write_outputs(args, img, mask, results, sections):
    if not any(r.seams for r in results) and args.input.suffix.lower() == args.out.suffix.lower():
        if args.input.resolve() != args.out.resolve():
            shutil.copyfile(args.input, args.out)
    else:
        save_image(img, args.out)
    if mask is not None:
        save_mask(mask, _mask_out(args))
    if args.emit_seams:
        write_seam_trace(args.emit_seams, sections)


def cmd_retarget(args) -> int:
    if args.width is None and args.height is None:
        raise UsageError("give --width and/or --height")
    img, mask = _load_inputs(args)
    width = img.width if args.width is None else args.width
    height = img.height if args.height is None else args.height
    if width > img.width or height > img.height:
        raise UsageError(f"target {width}x{height} exceeds input {img.width}x{img.height}; only reduction is supported")
    results, sections = [], []
    importance = None
    if not (args.importance.derived and not args.static):
        importance = importance_for(img, mask, args.importance)
    w0, h0 = img.width, img.height
    res = carve_to_width(img, mask, args.importance, width, static=args.static, importance=importance)
    results.append(res)
    sections.append(TraceSection.from_result(res, w0, h0))
    if importance is not None:
        # carry the static map through the vertical pass
        for seam in res.seams:
            importance = remove_seam_map(importance, seam)
    img, mask = res.image, res.mask
    res = carve_to_height(img, mask, args.importance, height, static=args.static, importance=importance)
    results.append(res)
    sections.append(TraceSection.from_result(res, img.height, img.width))
    _write_outputs(args, res.image, res.mask, results, sections)
    log.info("%s: %dx%d -> %dx%d", args.input, w0, h0, res.image.width, res.image.height)
    return EXIT_OK


def cmd_square(args) -> int:
    img, mask = _load_inputs(args)
    res = make_it_square(img, mask, args.importance, static=args.static)
    if img.width >= img.height:
        section = TraceSection.from_result(res, img.width, img.height)
    else:
        section = TraceSection.from_result(res, img.height, img.width)
    _write_outputs(args, res.image, res.mask, [res], [section])
    log.info("%s: %dx%d -> %dx%d (%d seams)", args.input, img.width, img.height,
             res.image.width, res.image.height, len(res.seams))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    entries = scan_dataset(args.dataset, args.image_suffix, args.mask_suffix)
    report = evaluate_dataset(
        entries,
        args.importance,
        args.n_points,
        threads=args.threads,
        label=args.label,
        map_suffix=args.map_suffix,
        mask_threshold=args.mask_threshold,
        static=args.static,
    )
    write_rows_csv(report, args.out_csv, timing=args.timing)
    write_aggregate_json(report, args.out_json)
    agg = report.aggregate()
    log.info("%s: %d images, %d excluded, MAR=%s MSSD=%s", agg["source"], agg["n_images"],
             agg["n_excluded"], agg["mar"], agg["mssd"])
    return EXIT_OK


def cmd_correlate(args) -> int:
    tables = list(args.table)
    ratings_path = args.ratings
    if args.published_table:
        metric_path, published_ratings = published_table_paths()
        tables.append(metric_path)
        ratings_path = ratings_path or published_ratings
    if not tables and not args.aggregates:
        raise UsageError("give aggregate JSON files, --table, or --published-table")
    if ratings_path is None:
        raise UsageError("--ratings is required")
    metrics = metrics_from_aggregates(args.aggregates)
    for path in tables:
        for method, row in read_metric_table(path).items():
            if method in metrics:
                raise DatasetError(f"method {method!r} given twice")
            metrics[method] = row
    matrix = correlate_methods(metrics, read_ratings_csv(ratings_path))
    print(f"methods: {', '.join(matrix.methods)}")
    print(matrix.format(args.digits))
    return EXIT_OK


def _setup_logging():
    level = os.environ.get("CARVEBENCH_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"carvebench {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CarveError as exc:
        print(f"carvebench {args.command}: bad dimensions: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"carvebench {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DatasetError, ValueError) as exc:
        print(f"carvebench {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
