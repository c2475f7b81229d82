"""Hot inner loops, each in a numba and a pure-numpy flavour.

The two flavours of the seam DP, seam removal and the gradient kernels perform
the same floating-point operations in the same order, so their outputs agree
bit for bit. The chi-square cost matrix is summed in a different order by
numpy and only agrees to rounding.

The public names dispatch on :data:`carvebench._accel.USE_NUMBA` at call time.
"""
from __future__ import annotations

import numpy as np

from . import _accel

# --------------------------------------------------------------------------
# cumulative-cost DP + backtrack


def _seam_dp_py(energy):
    h, w = energy.shape
    cost = np.empty((h, w), dtype=np.float64)
    step = np.zeros((h, w), dtype=np.int8)
    for j in range(w):
        cost[0, j] = energy[0, j]
    for i in range(1, h):
        for j in range(w):
            # candidates in column order so that strict < keeps the leftmost tie
            best = np.inf
            off = 0
            if j > 0:
                best = cost[i - 1, j - 1]
                off = -1
            if cost[i - 1, j] < best:
                best = cost[i - 1, j]
                off = 0
            if j + 1 < w and cost[i - 1, j + 1] < best:
                best = cost[i - 1, j + 1]
                off = 1
            cost[i, j] = energy[i, j] + best
            step[i, j] = off
    seam = np.empty(h, dtype=np.int64)
    col = 0
    for j in range(1, w):
        if cost[h - 1, j] < cost[h - 1, col]:
            col = j
    seam[h - 1] = col
    for i in range(h - 1, 0, -1):
        col += step[i, col]
        seam[i - 1] = col
    return seam, cost[h - 1, seam[h - 1]]


def _seam_dp_numpy(energy):
    h, w = energy.shape
    step = np.zeros((h, w), dtype=np.int8)
    prev = energy[0].astype(np.float64, copy=True)
    cols = np.arange(w)
    pad = np.array([np.inf])
    for i in range(1, h):
        cand = np.vstack((np.concatenate((pad, prev[:-1])), prev, np.concatenate((prev[1:], pad))))
        k = np.argmin(cand, axis=0)
        prev = energy[i] + cand[k, cols]
        step[i] = k - 1
    seam = np.empty(h, dtype=np.int64)
    col = int(np.argmin(prev))
    seam[h - 1] = col
    for i in range(h - 1, 0, -1):
        col += int(step[i, col])
        seam[i - 1] = col
    return seam, float(prev[seam[h - 1]])


_seam_dp_numba = _accel.jit(_seam_dp_py)


def seam_dp(energy: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost 8-connected vertical path through ``energy``.

    Returns the column index per row and the path's accumulated cost.
    """
    energy = np.ascontiguousarray(energy, dtype=np.float64)
    if _accel.USE_NUMBA:
        seam, total = _seam_dp_numba(energy)
        return seam, float(total)
    return _seam_dp_numpy(energy)


# --------------------------------------------------------------------------
# seam removal


def _remove_seam_py(arr, seam):
    h, w, c = arr.shape
    out = np.empty((h, w - 1, c), dtype=arr.dtype)
    for i in range(h):
        y = seam[i]
        for j in range(y):
            for k in range(c):
                out[i, j, k] = arr[i, j, k]
        for j in range(y + 1, w):
            for k in range(c):
                out[i, j - 1, k] = arr[i, j, k]
    return out


def _remove_seam_numpy(arr, seam):
    h, w = arr.shape[:2]
    keep = np.ones((h, w), dtype=bool)
    keep[np.arange(h), seam] = False
    return arr[keep].reshape((h, w - 1) + arr.shape[2:])


_remove_seam_numba = _accel.jit(_remove_seam_py)


def remove_seam(arr: np.ndarray, seam: np.ndarray) -> np.ndarray:
    """Delete one pixel per row of a (h, w) or (h, w, c) array."""
    seam = np.ascontiguousarray(seam, dtype=np.int64)
    if _accel.USE_NUMBA:
        flat = arr.ndim == 2
        src = np.ascontiguousarray(arr[:, :, None] if flat else arr)
        out = _remove_seam_numba(src, seam)
        return out[:, :, 0] if flat else out
    return _remove_seam_numpy(arr, seam)


# --------------------------------------------------------------------------
# gradient magnitudes on a float grayscale image, clamp-to-border


def _sobel_py(g):
    h, w = g.shape
    out = np.empty((h, w), dtype=np.float64)
    for i in range(h):
        up = max(i - 1, 0)
        dn = min(i + 1, h - 1)
        for j in range(w):
            lf = max(j - 1, 0)
            rt = min(j + 1, w - 1)
            gx = (g[up, rt] - g[up, lf]) + 2.0 * (g[i, rt] - g[i, lf]) + (g[dn, rt] - g[dn, lf])
            gy = (g[dn, lf] - g[up, lf]) + 2.0 * (g[dn, j] - g[up, j]) + (g[dn, rt] - g[up, rt])
            out[i, j] = np.sqrt(gx * gx + gy * gy)
    return out


def _sobel_numpy(g):
    h, w = g.shape
    p = np.pad(g, 1, mode="edge")
    up, mid, dn = slice(0, h), slice(1, h + 1), slice(2, h + 2)
    lf, ct, rt = slice(0, w), slice(1, w + 1), slice(2, w + 2)
    gx = (p[up, rt] - p[up, lf]) + 2.0 * (p[mid, rt] - p[mid, lf]) + (p[dn, rt] - p[dn, lf])
    gy = (p[dn, lf] - p[up, lf]) + 2.0 * (p[dn, ct] - p[up, ct]) + (p[dn, rt] - p[up, rt])
    return np.sqrt(gx * gx + gy * gy)


_sobel_numba = _accel.jit(_sobel_py)


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    gray = np.ascontiguousarray(gray, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _sobel_numba(gray)
    return _sobel_numpy(gray)


def _grad_l1_py(g):
    h, w = g.shape
    out = np.empty((h, w), dtype=np.float64)
    for i in range(h):
        for j in range(w):
            if w == 1:
                dx = 0.0
            elif j == 0:
                dx = g[i, 1] - g[i, 0]
            elif j == w - 1:
                dx = g[i, w - 1] - g[i, w - 2]
            else:
                dx = (g[i, j + 1] - g[i, j - 1]) * 0.5
            if h == 1:
                dy = 0.0
            elif i == 0:
                dy = g[1, j] - g[0, j]
            elif i == h - 1:
                dy = g[h - 1, j] - g[h - 2, j]
            else:
                dy = (g[i + 1, j] - g[i - 1, j]) * 0.5
            out[i, j] = abs(dx) + abs(dy)
    return out


def _diff_axis(g, axis):
    g = np.moveaxis(g, axis, 0)
    d = np.zeros_like(g)
    n = g.shape[0]
    if n > 1:
        d[0] = g[1] - g[0]
        d[-1] = g[-1] - g[-2]
        d[1:-1] = (g[2:] - g[:-2]) * 0.5
    return np.moveaxis(d, 0, axis)


def _grad_l1_numpy(g):
    return np.abs(_diff_axis(g, 1)) + np.abs(_diff_axis(g, 0))


_grad_l1_numba = _accel.jit(_grad_l1_py)


def gradient_l1(gray: np.ndarray) -> np.ndarray:
    gray = np.ascontiguousarray(gray, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _grad_l1_numba(gray)
    return _grad_l1_numpy(gray)


# --------------------------------------------------------------------------
# chi-square histogram cost


def _chi2_py(a, b):
    n, k = a.shape
    m = b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    for p in range(n):
        for q in range(m):
            acc = 0.0
            for t in range(k):
                den = a[p, t] + b[q, t]
                if den > 0.0:
                    diff = a[p, t] - b[q, t]
                    acc += diff * diff / den
            out[p, q] = 0.5 * acc
    return out


def _chi2_numpy(a, b):
    num = (a[:, None, :] - b[None, :, :]) ** 2
    den = a[:, None, :] + b[None, :, :]
    safe = np.where(den > 0, den, 1.0)
    return 0.5 * np.where(den > 0, num / safe, 0.0).sum(axis=2)


_chi2_numba = _accel.jit(_chi2_py)


def chi2_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise chi-square distances between rows of two histogram arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _chi2_numba(a, b)
    return _chi2_numpy(a, b)


# --------------------------------------------------------------------------
# square assignment (shortest augmenting path Hungarian with potentials)


def _hungarian_py(cost):
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)  # owner[j]: 1-based row matched to column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    assign = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        assign[owner[j] - 1] = j - 1
    return assign, u[1:].copy(), v[1:].copy()


def _hungarian_numpy(cost):
    # same algorithm with the column sweep vectorised
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    padded = np.zeros((n + 1, n + 1))
    padded[1:, 1:] = cost
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    assign = np.empty(n, dtype=np.int64)
    assign[owner[1:] - 1] = np.arange(n)
    return assign, u[1:].copy(), v[1:].copy()


_hungarian_numba = _accel.jit(_hungarian_py)


def hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns ``(assign, u, v)`` where row ``i`` is matched to column
    ``assign[i]`` and ``u``, ``v`` are optimal dual potentials, so
    ``cost[i, j] - u[i] - v[j] >= 0`` with equality on every matched edge.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if cost.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0), np.empty(0)
    if _accel.USE_NUMBA:
        return _hungarian_numba(cost)
    return _hungarian_numpy(cost)
