"""Planar geometry on complex point sets: snapping, hulls, Hausdorff distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import build_grid, nearest_distances
from .errors import DomainError, EmptyInput

HULL_TOL = 1e-12
_KEY_SHIFT = np.int64(1) << np.int64(32)
_KEY_OFFSET = np.int64(1) << np.int64(31)


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, PointCloud):
        return obj.points
    if isinstance(obj, ConvexPolygon):
        return obj.vertices
    return np.asarray(obj, dtype=complex).ravel()


def lex_sort(z: np.ndarray) -> np.ndarray:
    return z[np.lexsort((z.imag, z.real))]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points sorted by (re, im), at most one per ``resolution``-cell."""

    points: np.ndarray
    resolution: float

    def __post_init__(self):
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.size

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.points, other.points)

    def is_empty(self) -> bool:
        return self.points.size == 0

    def keys(self) -> np.ndarray:
        return cell_keys(self.points, self.resolution)

    def union(self, other) -> "PointCloud":
        return grid_snap(np.concatenate([self.points, _as_points(other)]), self.resolution)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Counter-clockwise vertices; one vertex is a point, two a segment."""

    vertices: np.ndarray

    def __len__(self) -> int:
        return self.vertices.size


def cell_indices(z: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    ix = np.floor(z.real / eps)
    iy = np.floor(z.imag / eps)
    lim = float(_KEY_OFFSET - 1)
    return (
        np.clip(ix, -lim, lim).astype(np.int64),
        np.clip(iy, -lim, lim).astype(np.int64),
    )


def cell_keys(z, eps: float) -> np.ndarray:
    """One int64 per point naming its ``eps``-cell."""
    ix, iy = cell_indices(np.asarray(z, dtype=complex).ravel(), eps)
    return ix * _KEY_SHIFT + (iy + _KEY_OFFSET)


def grid_snap(cloud, eps: float) -> PointCloud:
    """Keep the lexicographically smallest point of every ``eps``-cell."""
    if not eps > 0:
        raise DomainError("snapping resolution must be positive")
    z = _as_points(cloud)
    z = z[np.isfinite(z)]
    if z.size == 0:
        return PointCloud(np.empty(0, dtype=complex), float(eps))
    ix, iy = cell_indices(z, eps)
    order = np.lexsort((z.imag, z.real, iy, ix))
    ix, iy, z = ix[order], iy[order], z[order]
    first = np.ones(z.size, dtype=bool)
    first[1:] = (ix[1:] != ix[:-1]) | (iy[1:] != iy[:-1])
    return PointCloud(lex_sort(z[first]), float(eps))


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def convex_hull(points) -> ConvexPolygon:
    """Andrew's monotone chain; nearly collinear vertices are dropped."""
    z = _as_points(points)
    if z.size == 0:
        raise EmptyInput("convex hull of an empty set")
    z = np.unique(lex_sort(z))
    z = lex_sort(z)
    if z.size <= 2:
        return ConvexPolygon(z.copy())
    ext = max(np.ptp(z.real), np.ptp(z.imag))
    tol = HULL_TOL * max(ext * ext, 1e-300)
    pts = list(z)

    def chain(seq):
        out: list[complex] = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                cr = (a.real - o.real) * (p.imag - o.imag) - (a.imag - o.imag) * (p.real - o.real)
                if cr <= tol:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # every point on one line: keep the two extremes
        hull = [pts[0], pts[-1]]
    return ConvexPolygon(np.array(hull, dtype=complex))


def hausdorff(A, B) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a, b = _as_points(A), _as_points(B)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("Hausdorff distance needs two nonempty sets")
    ab = nearest_distances(a, build_grid(b)).max()
    ba = nearest_distances(b, build_grid(a)).max()
    return float(max(ab, ba))


def directed_distance(A, B) -> float:
    """``sup_{a in A} dist(a, B)``."""
    a, b = _as_points(A), _as_points(B)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("directed distance needs two nonempty sets")
    return float(nearest_distances(a, build_grid(b)).max())


def _segment_distance(p: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    L = abs(d) ** 2
    if L == 0:
        return np.abs(p - a)
    t = ((p - a) * np.conj(d)).real / L
    t = np.clip(t, 0.0, 1.0)
    return np.abs(p - (a + t * d))


def distance_to_filled_polygon(points, P: ConvexPolygon) -> np.ndarray:
    """Pointwise distance to the filled polygon (zero inside)."""
    p = _as_points(points)
    v = P.vertices
    if v.size == 1:
        return np.abs(p - v[0])
    if v.size == 2:
        return _segment_distance(p, v[0], v[1])
    m = v.size
    ext = max(np.ptp(v.real), np.ptp(v.imag))
    inside = np.ones(p.size, dtype=bool)
    best = np.full(p.size, np.inf)
    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        inside &= _cross(np.full(p.size, a), np.full(p.size, b), p) >= -HULL_TOL * ext * ext
        best = np.minimum(best, _segment_distance(p, a, b))
    return np.where(inside, 0.0, best)


def dist_to_polygon(cloud, P: ConvexPolygon) -> tuple[float, float]:
    """``(sup_out, coverage)``: how far the cloud leaves ``P``, how far ``P``'s corners are from it."""
    p = _as_points(cloud)
    if p.size == 0:
        raise EmptyInput("distance of an empty cloud")
    sup_out = float(distance_to_filled_polygon(p, P).max())
    coverage = directed_distance(P.vertices, p)
    return sup_out, coverage
