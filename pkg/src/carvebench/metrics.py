"""Retargeting quality metrics.

Area ratio measures how much of the salient region survives carving. The
squared-distance score measures how far the surviving silhouette is from the
original one after matching boundary points by shape context. Both are
averaged over a dataset (MAR and MSSD) in :mod:`carvebench.bench`. The Pearson
correlation compares those averages with user ratings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .raster import BinaryMask

N_RADIAL = 5
N_ANGULAR = 12
R_INNER = 0.125
R_OUTER = 2.0
DEFAULT_POINTS = 100


class EmptyGroundTruth(ValueError):
    """The reference mask has no salient pixel, so the area ratio is undefined."""


class ShapeDegenerate(ValueError):
    """Too few boundary pixels to describe a shape."""


class ZeroVariance(ValueError):
    pass


# --------------------------------------------------------------------------
# area ratio


def area_ratio(gt: BinaryMask, carved_gt: BinaryMask) -> float:
    total = gt.count()
    if total == 0:
        raise EmptyGroundTruth("ground-truth mask has no salient pixels")
    kept = carved_gt.count()
    if kept > total:
        raise ValueError("carved mask has more salient pixels than the original")
    return kept / total


# --------------------------------------------------------------------------
# boundary points

# clockwise starting from west, in (row, col) offsets with rows growing downward
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_MOORE_INDEX = {d: k for k, d in enumerate(_MOORE)}


def _trace_component(fg: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    # Moore-neighbour tracing. fg is padded so every neighbour of a foreground
    # pixel is in range. Stops when the first move out of start repeats, which
    # also terminates on one-pixel-wide lines walked in both directions.
    cur, back = start, (start[0], start[1] - 1)
    second = None
    path = []
    for _ in range(8 * int(fg.sum()) + 8):
        k0 = _MOORE_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        prev, nxt = back, None
        for step in range(1, 9):
            dr, dc = _MOORE[(k0 + step) % 8]
            cand = (cur[0] + dr, cur[1] + dc)
            if fg[cand]:
                nxt = cand
                break
            prev = cand
        if nxt is None:
            return [start]
        if cur == start:
            if second is None:
                second = nxt
            elif nxt == second:
                return path
        path.append(cur)
        cur, back = nxt, prev
    raise RuntimeError("boundary trace did not close")


def trace_boundaries(mask: BinaryMask) -> np.ndarray:
    """Outer boundary of every 8-connected component as one (L, 2) array of (x, y).

    Components are visited in raster order of their top-left pixel; each
    boundary starts there and runs clockwise. Holes are not traced.
    """
    fg = np.pad(mask.salient, 1)
    labels, count = ndimage.label(fg, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.empty((0, 2))
    pieces = []
    for lab, (rs, cs) in enumerate(ndimage.find_objects(labels), start=1):
        r0, c0 = rs.start - 1, cs.start - 1
        comp = labels[r0 : rs.stop + 1, c0 : cs.stop + 1] == lab
        rows, cols = np.nonzero(comp)
        start = (int(rows[0]), int(cols[0]))  # nonzero is row-major
        pieces.extend((r + r0, c + c0) for r, c in _trace_component(comp, start))
    pts = np.array(pieces, dtype=np.float64) - 1.0
    return pts[:, ::-1].copy()


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Centroid to the origin, mean distance to the centroid scaled to 1."""
    pts = np.asarray(points, dtype=np.float64)
    pts = pts - pts.mean(axis=0)
    scale = np.hypot(pts[:, 0], pts[:, 1]).mean()
    if scale == 0:
        raise ShapeDegenerate("all points coincide")
    return pts / scale


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"expected (N, 2) coordinates, got shape {pts.shape}")
        if len(pts) < 3:
            raise ShapeDegenerate(f"need at least 3 points, got {len(pts)}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_raw(cls, coords) -> "PointSet":
        return cls(normalize_points(coords))

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return np.array_equal(self.points, other.points)


def _boundary(mask: BinaryMask) -> np.ndarray:
    pts = trace_boundaries(mask)
    if len(np.unique(pts, axis=0)) < 3:
        raise ShapeDegenerate(f"mask has {len(np.unique(pts, axis=0))} boundary pixels, need at least 3")
    return pts


def _subsample(boundary: np.ndarray, n: int) -> np.ndarray:
    idx = (np.arange(n) * len(boundary)) // n
    return boundary[idx]


def extract_shape_points(mask: BinaryMask, n: int = DEFAULT_POINTS) -> PointSet:
    """Sample ``n`` boundary points by index stride and normalize them.

    If the traced boundary is shorter than ``n``, all of it is used.
    """
    boundary = _boundary(mask)
    return PointSet.from_raw(_subsample(boundary, min(n, len(boundary))))


# --------------------------------------------------------------------------
# shape contexts


@dataclass(frozen=True, eq=False)
class ShapeDescriptor:
    """Per-point log-polar histograms, shape (N, radial * angular), bin = r * angular + a."""

    histograms: np.ndarray
    n_radial: int = N_RADIAL
    n_angular: int = N_ANGULAR

    def __len__(self):
        return len(self.histograms)

    def grid(self) -> np.ndarray:
        return self.histograms.reshape(len(self), self.n_radial, self.n_angular)


def shape_context(
    ps,
    n_radial: int = N_RADIAL,
    n_angular: int = N_ANGULAR,
    r_inner: float = R_INNER,
    r_outer: float = R_OUTER,
) -> ShapeDescriptor:
    pts = ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=np.float64)
    n = len(pts)
    if n < 2:
        raise ShapeDegenerate("shape context needs at least two points")
    rel = pts[None, :, :] - pts[:, None, :]  # rel[p, q] = q - p
    dist = np.hypot(rel[..., 0], rel[..., 1])
    off = ~np.eye(n, dtype=bool)
    mean_dist = dist[off].mean()
    if mean_dist == 0:
        raise ShapeDegenerate("all points coincide")

    edges = np.geomspace(r_inner, r_outer, n_radial + 1)
    rbin = np.clip(np.searchsorted(edges, dist / mean_dist, side="right") - 1, 0, n_radial - 1)
    theta = np.mod(np.arctan2(rel[..., 1], rel[..., 0]), 2 * np.pi)
    abin = np.minimum((theta / (2 * np.pi / n_angular)).astype(np.int64), n_angular - 1)

    flat = rbin * n_angular + abin
    nbins = n_radial * n_angular
    hist = np.zeros((n, nbins), dtype=np.int64)
    rows = np.broadcast_to(np.arange(n)[:, None], (n, n))
    np.add.at(hist, (rows[off], flat[off]), 1)
    hist.flags.writeable = False
    return ShapeDescriptor(hist, n_radial, n_angular)


# --------------------------------------------------------------------------
# matching


@dataclass(frozen=True, eq=False)
class Correspondence:
    """``perm[i]`` is the point of shape B matched to point ``i`` of shape A."""

    perm: np.ndarray
    cost: float

    def __post_init__(self):
        perm = np.array(self.perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(len(perm))):
            raise ValueError("correspondence is not a permutation")
        perm.flags.writeable = False
        object.__setattr__(self, "perm", perm)


def chi2_cost(a: ShapeDescriptor, b: ShapeDescriptor) -> np.ndarray:
    return kernels.chi2_cost(a.histograms, b.histograms)


def assignment_cost(cost: np.ndarray, perm) -> float:
    return math.fsum(cost[np.arange(len(perm)), perm])


def _tight_edges(cost, u, v):
    reduced = cost - u[:, None] - v[None, :]
    tol = 1e-9 * max(1.0, float(np.abs(cost).max()))
    return reduced <= tol


def optimal_assignment(cost: np.ndarray, tiebreak: np.ndarray | None = None) -> np.ndarray:
    """Minimum-cost permutation; among cost-optimal ones, the cheapest under ``tiebreak``."""
    perm, u, v = kernels.hungarian(cost)
    if tiebreak is None or len(perm) < 2:
        return perm
    tight = _tight_edges(cost, u, v)
    if tight.sum() == len(perm):
        return perm
    big = (float(np.abs(tiebreak).max()) + 1.0) * (len(perm) + 1)
    alt, _, _ = kernels.hungarian(np.where(tight, tiebreak, big))
    # keep the alternative only if it is no worse on the primary cost
    if tight[np.arange(len(alt)), alt].all() and assignment_cost(cost, alt) <= assignment_cost(cost, perm):
        return alt
    return perm


def match_shapes(a: ShapeDescriptor, b: ShapeDescriptor, tiebreak: np.ndarray | None = None) -> Correspondence:
    """Minimum total chi-square cost bijection from points of ``a`` to points of ``b``.

    ``tiebreak`` is an optional secondary (N, N) cost used only to choose
    between matchings of equal chi-square cost.
    """
    if len(a) != len(b):
        raise ValueError(f"shapes have {len(a)} and {len(b)} points")
    cost = chi2_cost(a, b)
    perm = optimal_assignment(cost, tiebreak)
    return Correspondence(perm, assignment_cost(cost, perm))


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return (d**2).sum(axis=2)


def ssd(a: PointSet, b: PointSet, corr: Correspondence) -> float:
    """Mean squared distance between matched points."""
    if len(a) != len(b) or len(corr.perm) != len(a):
        raise ValueError("point sets and correspondence differ in size")
    diff = a.points - b.points[corr.perm]
    return float((diff**2).sum(axis=1).mean())


def mssd_pair(gt: BinaryMask, carved_gt: BinaryMask, n: int = DEFAULT_POINTS) -> float:
    """Shape distortion between a mask and its carved version.

    Both boundaries are sampled with the same number of points, lowered to the
    shorter boundary when needed. Equal-cost matchings are resolved by
    smallest squared distance, so a shape compared with itself scores 0.
    """
    ba = _boundary(gt)
    bb = _boundary(carved_gt)
    k = min(n, len(ba), len(bb))
    pa = PointSet.from_raw(_subsample(ba, k))
    pb = PointSet.from_raw(_subsample(bb, k))
    corr = match_shapes(shape_context(pa), shape_context(pb), tiebreak=_squared_distances(pa.points, pb.points))
    return ssd(pa, pb, corr)


# --------------------------------------------------------------------------
# correlation


def pearson_cc(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError(f"sequences must be 1-D and equal length, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("need at least two values")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0 or sy == 0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    r = float(dx @ dy) / (sx * sy)
    return min(1.0, max(-1.0, r))
