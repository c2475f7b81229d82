import csv
import json
import logging
import math

import numpy as np
import pytest

from carvebench.bench import (
    CSV_COLUMNS,
    DatasetError,
    EvalReport,
    EvalRow,
    correlate_methods,
    correlate_reports,
    evaluate_dataset,
    published_table_paths,
    read_aggregate_json,
    read_metric_table,
    read_ratings_csv,
    read_rows_csv,
    rounding_note,
    scan_dataset,
    write_aggregate_json,
    write_rows_csv,
)
from carvebench.importance import ImportanceSource

from conftest import write_pair

MASK = ImportanceSource.ground_truth()


def test_scan_pairs_sorted(dataset):
    entries = scan_dataset(dataset)
    assert [e.id for e in entries] == ["a", "b"]
    assert entries[0].image.name == "a.jpg" and entries[0].mask.name == "a.png"


def test_scan_skips_orphans(dataset, caplog):
    (dataset / "c.jpg").write_bytes(b"")
    (dataset / "d.png").write_bytes(b"")
    with caplog.at_level(logging.WARNING):
        entries = scan_dataset(dataset)
    assert [e.id for e in entries] == ["a", "b"]
    assert "skipping c" in caplog.text and "skipping d" in caplog.text


def test_scan_errors(tmp_path):
    with pytest.raises(DatasetError):
        scan_dataset(tmp_path)
    with pytest.raises(NotADirectoryError):
        scan_dataset(tmp_path / "nope")
    with pytest.raises(DatasetError):
        scan_dataset(tmp_path, ".png", ".png")


def test_scan_custom_suffixes(tmp_path):
    write_pair(tmp_path, "x", 4, 6, image_suffix=".jpeg")
    (tmp_path / "x.png").rename(tmp_path / "x_gt.png")
    entries = scan_dataset(tmp_path, ".jpeg", "_gt.png")
    assert [e.id for e in entries] == ["x"]


def test_evaluate_mask_importance_preserves_everything(dataset):
    report = evaluate_dataset(scan_dataset(dataset), MASK)
    assert report.mar == 1.0
    assert [(r.target_w, r.target_h) for r in report.rows] == [(6, 6), (7, 7)]
    assert report.n_excluded == 0
    for r in report.rows:
        assert r.area_ratio == 1.0 and r.ssd >= 0.0


def test_evaluate_square_images(tmp_path):
    for k, side in enumerate((5, 8, 9)):
        write_pair(tmp_path, f"s{k}", side, side, seed=k)
    report = evaluate_dataset(scan_dataset(tmp_path), ImportanceSource.sobel())
    assert all(r.area_ratio == 1.0 and r.ssd == 0.0 for r in report.rows)
    assert report.mar == 1.0 and report.mssd == 0.0


def test_evaluate_excludes_empty_mask(tmp_path):
    write_pair(tmp_path, "full", 6, 10, seed=3)
    write_pair(tmp_path, "void", 6, 10, empty=True, seed=4)
    report = evaluate_dataset(scan_dataset(tmp_path), ImportanceSource.sobel())
    assert report.n_images == 2 and report.n_excluded == 1
    void = report.rows[1]
    assert void.id == "void" and void.area_ratio is None and void.ssd is None
    assert void.excluded == "empty_gt"
    assert report.mar == report.rows[0].area_ratio


def test_evaluate_records_failures_without_aborting(tmp_path):
    from PIL import Image

    write_pair(tmp_path, "good", 6, 10)
    Image.fromarray(np.zeros((6, 10, 3), np.uint8)).save(tmp_path / "bad.jpg")
    Image.fromarray(np.zeros((5, 10), np.uint8), mode="L").save(tmp_path / "bad.png")
    (tmp_path / "corrupt.jpg").write_bytes(b"nope")
    Image.fromarray(np.zeros((5, 10), np.uint8), mode="L").save(tmp_path / "corrupt.png")
    report = evaluate_dataset(scan_dataset(tmp_path), MASK)
    rows = {r.id: r for r in report.rows}
    assert rows["bad"].excluded.startswith("error:")
    assert rows["corrupt"].excluded.startswith("error:")
    assert rows["good"].area_ratio == 1.0
    assert report.n_excluded == 2 and report.mar == 1.0


def test_evaluate_external_map_directory(dataset, tmp_path):
    from PIL import Image

    maps = tmp_path / "maps"
    maps.mkdir()
    for stem in ("a", "b"):
        Image.open(dataset / f"{stem}.png").save(maps / f"{stem}.png")
    report = evaluate_dataset(scan_dataset(dataset), ImportanceSource.external(maps), label="GT-as-map")
    assert report.source == "GT-as-map" and report.mar == 1.0


def test_threads_do_not_change_rows(dataset):
    for k in range(4):
        write_pair(dataset, f"z{k}", 8, 13, seed=10 + k)
    entries = scan_dataset(dataset)
    one = evaluate_dataset(entries, ImportanceSource.sobel(), threads=1)
    many = evaluate_dataset(entries, ImportanceSource.sobel(), threads=4)
    strip = lambda rep: [(r.id, r.area_ratio, r.ssd, r.excluded) for r in rep.rows]
    assert strip(one) == strip(many)


def test_aggregates_recomputable(tmp_path):
    rows = [EvalRow(str(k), 9, 5, 5, 5, 0.1 * k, 0.01 * k) for k in range(1, 8)]
    rows.append(EvalRow("x", 9, 5, 5, 5, 0.5, None, "degenerate_shape"))
    report = EvalReport("sobel", rows)
    assert abs(report.mar - np.mean([r.area_ratio for r in rows])) <= 1e-12
    assert abs(report.mssd - np.mean([r.ssd for r in rows[:-1]])) <= 1e-12
    assert report.n_excluded == 1
    write_rows_csv(report, tmp_path / "r.csv")
    back = EvalReport("sobel", read_rows_csv(tmp_path / "r.csv"))
    assert back.mar == report.mar and back.mssd == report.mssd


def test_csv_and_json_format(dataset, tmp_path):
    report = evaluate_dataset(scan_dataset(dataset), ImportanceSource.sobel())
    write_rows_csv(report, tmp_path / "r.csv")
    write_aggregate_json(report, tmp_path / "r.json")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert all(r[-1] == "" for r in rows[1:])
    assert float(rows[1][6]) == report.rows[0].ssd  # lossless float text
    agg = json.loads((tmp_path / "r.json").read_text())
    assert set(agg) == {"source", "n_images", "n_excluded", "mar", "mssd"}
    assert agg["mar"] == report.mar and read_aggregate_json(tmp_path / "r.json") == agg

    write_rows_csv(report, tmp_path / "t.csv", timing=True)
    with open(tmp_path / "t.csv") as fh:
        timed = list(csv.reader(fh))
    assert all(float(r[-1]) >= 0 for r in timed[1:])


def test_ratings_and_table_readers(tmp_path):
    metrics_path, ratings_path = published_table_paths()
    ratings = read_ratings_csv(ratings_path)
    assert list(ratings) == ["Sobel", "Structured Edge", "COV", "BMS", "HDCT", "DRFI"]
    assert ratings["DRFI"] == 5.7
    table = read_metric_table(metrics_path)
    assert table["Sobel"] == {"mar": 0.8976, "mssd": 0.0406}

    bad = tmp_path / "bad.csv"
    bad.write_text("method,rating\nA,high\n")
    with pytest.raises(DatasetError):
        read_ratings_csv(bad)
    bad.write_text("method,rating\nA,1,2\n")
    with pytest.raises(DatasetError):
        read_ratings_csv(bad)
    bad.write_text("name,score\n")
    with pytest.raises(DatasetError):
        read_metric_table(bad)


def test_correlation_matrix_on_published_table():
    metrics_path, ratings_path = published_table_paths()
    cm = correlate_methods(read_metric_table(metrics_path), read_ratings_csv(ratings_path))
    assert np.array_equal(cm.values, cm.values.T)
    assert np.all(np.diag(cm.values) == 1.0)
    assert cm.cell("User Ratings", "MAR") == pytest.approx(0.955, abs=0.005)
    assert round(cm.cell("User Ratings", "- MSSD"), 3) == 0.977
    assert round(cm.cell("MAR", "- MSSD"), 3) == 0.981
    assert any("MSSD" in n and "4 decimals" in n for n in cm.notes)
    text = cm.format()
    assert "0.955" in text and "note:" in text


def test_correlate_reports_length_mismatch():
    with pytest.raises(ValueError):
        correlate_reports([0.9, 0.8], [0.1, 0.2, 0.3], [1, 2])


def test_correlate_methods_misaligned():
    with pytest.raises(DatasetError):
        correlate_methods({"A": {"mar": 1, "mssd": 0}, "B": {"mar": 0.5, "mssd": 1}}, {"A": 1.0, "C": 2.0})


def test_rounding_note():
    assert rounding_note("MSSD", [0.0406, 0.0387]) is not None
    assert rounding_note("MAR", [0.8976, 0.9877]) is None  # spans 901 units
    assert rounding_note("X", [math.pi, math.e]) is None  # full precision


def test_degenerate_shape_keeps_area_ratio(tmp_path):
    from PIL import Image

    write_pair(tmp_path, "blob", 8, 8, seed=7)
    Image.fromarray(np.zeros((8, 8, 3), np.uint8)).save(tmp_path / "dot.jpg")
    dot = np.zeros((8, 8), np.uint8)
    dot[3, 3:5] = 255
    Image.fromarray(dot, mode="L").save(tmp_path / "dot.png")
    report = evaluate_dataset(scan_dataset(tmp_path), MASK)
    row = report.rows[1]
    assert row.id == "dot" and row.excluded == "degenerate_shape"
    assert row.area_ratio == 1.0 and row.ssd is None
    assert report.n_excluded == 1
    assert report.mar == 1.0 and report.mssd == report.rows[0].ssd
