"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once per backend to warm up (and compile), then the best of
``--repeat`` runs is reported.
"""
import argparse
import time

import numpy as np

from carvebench import _accel, kernels
from carvebench.carve import make_it_square
from carvebench.importance import ImportanceSource
from carvebench.metrics import shape_context
from carvebench.raster import RasterImage


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    energy = rng.random((400, 600))
    gray = rng.random((400, 600))
    rgb = rng.integers(0, 256, (400, 600, 3), dtype=np.uint8)
    seam = kernels.seam_dp(energy)[0]
    a = shape_context(rng.random((100, 2))).histograms
    b = shape_context(rng.random((100, 2))).histograms
    cost = kernels.chi2_cost(a, b)
    img = RasterImage(rng.integers(0, 256, (120, 200, 3), dtype=np.uint8))
    return [
        ("seam_dp 400x600", lambda: kernels.seam_dp(energy)),
        ("remove_seam rgb 400x600", lambda: kernels.remove_seam(rgb, seam)),
        ("sobel 400x600", lambda: kernels.sobel_magnitude(gray)),
        ("gradient_l1 400x600", lambda: kernels.gradient_l1(gray)),
        ("chi2 100x100", lambda: kernels.chi2_cost(a, b)),
        ("hungarian 100x100", lambda: kernels.hungarian(cost)),
        ("make_it_square 200x120 sobel", lambda: make_it_square(img, None, ImportanceSource.sobel())),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not available (not installed or CARVEBENCH_NO_NUMBA is set)")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in cases(rng):
        row = {}
        for use in (False, True):
            _accel.USE_NUMBA = use
            row[use] = best_time(fn, args.repeat)
        _accel.USE_NUMBA = True
        print(f"{name:<32}{row[False] * 1e3:>12.3f}{row[True] * 1e3:>12.3f}{row[False] / row[True]:>9.1f}x")


if __name__ == "__main__":
    main()
