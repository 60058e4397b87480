"""Hot kernels: batched polynomial roots and grid-bucket nearest neighbours.

Each kernel exists twice, a loop-style body compiled by numba and a vectorised
numpy twin with the same arithmetic.  The public dispatchers pick one according
to :data:`minvset._accel.USE_NUMBA`.  Both are exercised by the test suite and
compared by ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np

from ._accel import USE_NUMBA, apply_thread_cap, njit, prange

EPS = float(np.finfo(float).eps)
DEGREE_RTOL = 1e-13
ABERTH_MAXITER = 200
_START_ANGLE = 0.4


class RootBatch(NamedTuple):
    roots: np.ndarray  # (m, dmax), NaN where a row has fewer roots
    degree: np.ndarray  # effective degree per row, -1 for the zero row
    fallback: np.ndarray  # rows solved by the companion-matrix fallback


# ---------------------------------------------------------------------------
# roots: numba body
# ---------------------------------------------------------------------------


@njit(cache=True)
def _quadratic_nb(c0, c1, c2):
    disc = cmath.sqrt(c1 * c1 - 4.0 * c2 * c0)
    if c1.real * disc.real + c1.imag * disc.imag >= 0.0:
        q = -0.5 * (c1 + disc)
    else:
        q = -0.5 * (c1 - disc)
    if q == 0:
        return 0j, 0j
    return q / c2, c0 / q


@njit(cache=True)
def _aberth_nb(a, d, z, maxiter):
    lead = a[d]
    s = -a[d - 1] / (d * lead)
    ps = a[d]
    for i in range(d - 1, -1, -1):
        ps = ps * s + a[i]
    rho = (abs(ps) / abs(lead)) ** (1.0 / d)
    if not (rho > 0.0) or not math.isfinite(rho):
        rho = 1e-3 * (1.0 + abs(s))
    for k in range(d):
        z[k] = s + rho * cmath.exp(1j * (2.0 * math.pi * k / d + _START_ANGLE))
    done = np.zeros(d, np.bool_)
    for _ in range(maxiter):
        nconv = 0
        for k in range(d):
            if done[k]:
                nconv += 1
                continue
            zk = z[k]
            p = a[d]
            dp = 0j
            eb = abs(a[d])
            az = abs(zk)
            for i in range(d - 1, -1, -1):
                dp = dp * zk + p
                p = p * zk + a[i]
                eb = eb * az + abs(a[i])
            if abs(p) <= 8.0 * EPS * eb:
                done[k] = True
                nconv += 1
                continue
            acc = 0j
            for j in range(d):
                if j != k:
                    diff = zk - z[j]
                    if diff != 0:
                        acc += 1.0 / diff
            den = dp - p * acc
            if den == 0:
                w = 1e-3 * (1.0 + az) * cmath.exp(1j * (k + 1.0))
            else:
                w = p / den
            z[k] = zk - w
            if abs(w) <= 2.0 * EPS * abs(z[k]):
                done[k] = True
        if nconv == d:
            return True
    for k in range(d):
        if not done[k]:
            return False
    return True


@njit(cache=True, parallel=True)
def _roots_batch_nb(C, rtol, maxiter, out, deg, ok):
    m, L = C.shape
    for r in prange(m):
        scale = 0.0
        for i in range(L):
            v = abs(C[r, i])
            if v > scale:
                scale = v
        d = -1
        if scale > 0.0:
            for i in range(L - 1, -1, -1):
                if abs(C[r, i]) > rtol * scale:
                    d = i
                    break
        deg[r] = d
        ok[r] = True
        if d <= 0:
            continue
        if d == 1:
            out[r, 0] = -C[r, 0] / C[r, 1]
        elif d == 2:
            r1, r2 = _quadratic_nb(C[r, 0], C[r, 1], C[r, 2])
            out[r, 0] = r1
            out[r, 1] = r2
        else:
            z = np.empty(d, np.complex128)
            ok[r] = _aberth_nb(C[r], d, z, maxiter)
            for k in range(d):
                out[r, k] = z[k]


# ---------------------------------------------------------------------------
# roots: numpy twin
# ---------------------------------------------------------------------------


def _effective_degree_np(C: np.ndarray, rtol: float) -> np.ndarray:
    mag = np.abs(C)
    scale = mag.max(axis=1) if C.shape[1] else np.zeros(C.shape[0])
    keep = mag > rtol * scale[:, None]
    has = keep.any(axis=1)
    last = C.shape[1] - 1 - np.argmax(keep[:, ::-1], axis=1)
    return np.where(has, last, -1).astype(np.int64)


def _quadratic_np(c0, c1, c2):
    disc = np.sqrt(c1 * c1 - 4.0 * c2 * c0)
    plus = c1.real * disc.real + c1.imag * disc.imag >= 0.0
    q = np.where(plus, -0.5 * (c1 + disc), -0.5 * (c1 - disc))
    zero = q == 0
    qs = np.where(zero, 1.0, q)
    r1 = np.where(zero, 0j, qs / c2)
    r2 = np.where(zero, 0j, c0 / qs)
    return r1, r2


def _aberth_np(A: np.ndarray, d: int, maxiter: int):
    m = A.shape[0]
    lead = A[:, d]
    s = -A[:, d - 1] / (d * lead)
    ps = A[:, d].copy()
    for i in range(d - 1, -1, -1):
        ps = ps * s + A[:, i]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = (np.abs(ps) / np.abs(lead)) ** (1.0 / d)
    bad = ~(rho > 0.0) | ~np.isfinite(rho)
    rho = np.where(bad, 1e-3 * (1.0 + np.abs(s)), rho)
    ang = np.exp(1j * (2.0 * np.pi * np.arange(d) / d + _START_ANGLE))
    Z = s[:, None] + rho[:, None] * ang[None, :]
    done = np.zeros((m, d), dtype=bool)
    for _ in range(maxiter):
        if done.all():
            break
        for k in range(d):
            idx = np.flatnonzero(~done[:, k])
            if idx.size == 0:
                continue
            a = A[idx]
            zk = Z[idx, k]
            p = a[:, d].copy()
            dp = np.zeros_like(zk)
            eb = np.abs(a[:, d])
            az = np.abs(zk)
            for i in range(d - 1, -1, -1):
                dp = dp * zk + p
                p = p * zk + a[:, i]
                eb = eb * az + np.abs(a[:, i])
            conv = np.abs(p) <= 8.0 * EPS * eb
            diff = zk[:, None] - Z[idx]
            diff[:, k] = np.inf
            diff[diff == 0] = np.inf
            acc = (1.0 / diff).sum(axis=1)
            den = dp - p * acc
            nudge = 1e-3 * (1.0 + az) * np.exp(1j * (k + 1.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(den == 0, nudge, p / np.where(den == 0, 1.0, den))
            znew = np.where(conv, zk, zk - w)
            Z[idx, k] = znew
            small = np.abs(w) <= 2.0 * EPS * np.abs(znew)
            done[idx, k] = conv | small
    return Z, done.all(axis=1)


def _roots_batch_np(C, rtol, maxiter, out, deg, ok):
    deg[:] = _effective_degree_np(C, rtol)
    ok[:] = True
    for d in np.unique(deg):
        if d <= 0:
            continue
        rows = np.flatnonzero(deg == d)
        A = C[rows, : d + 1]
        if d == 1:
            out[rows, 0] = -A[:, 0] / A[:, 1]
        elif d == 2:
            r1, r2 = _quadratic_np(A[:, 0], A[:, 1], A[:, 2])
            out[rows, 0] = r1
            out[rows, 1] = r2
        else:
            Z, good = _aberth_np(A, int(d), maxiter)
            out[rows, :d] = Z
            ok[rows] = good


def companion_roots(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of the companion matrix of ``a`` (ascending, a[-1] != 0)."""
    a = np.asarray(a, dtype=complex)
    d = a.size - 1
    if d < 1:
        return np.empty(0, dtype=complex)
    M = np.zeros((d, d), dtype=complex)
    M[1:, :-1] = np.eye(d - 1)
    M[:, -1] = -a[:-1] / a[-1]
    return np.linalg.eigvals(M)


def roots_batch(C, rtol: float = DEGREE_RTOL, maxiter: int = ABERTH_MAXITER) -> RootBatch:
    """Roots of every row of ``C`` (ascending coefficients), row by row.

    A row's degree is the last coefficient above ``rtol`` times the row's largest
    modulus; missing roots are NaN.  Rows where Aberth stalls are re-solved from
    the companion matrix.
    """
    C = np.ascontiguousarray(C, dtype=np.complex128)
    if C.ndim != 2:
        raise ValueError("coefficient batch must be two-dimensional")
    m, L = C.shape
    out = np.full((m, max(L - 1, 0)), complex(np.nan, np.nan))
    deg = np.empty(m, dtype=np.int64)
    ok = np.ones(m, dtype=bool)
    if m and L > 1:
        if USE_NUMBA:
            apply_thread_cap()
            _roots_batch_nb(C, rtol, maxiter, out, deg, ok)
        else:
            _roots_batch_np(C, rtol, maxiter, out, deg, ok)
    elif m:
        deg[:] = np.where(np.abs(C[:, 0]) > 0, 0, -1) if L else -1
    fallback = ~ok
    for r in np.flatnonzero(fallback):
        d = int(deg[r])
        out[r, :d] = companion_roots(C[r, : d + 1])
    return RootBatch(out, deg, fallback)


# ---------------------------------------------------------------------------
# nearest neighbours on a uniform grid
# ---------------------------------------------------------------------------


class GridIndex(NamedTuple):
    x: np.ndarray  # target points sorted by cell
    y: np.ndarray
    starts: np.ndarray  # cell c holds x[starts[c]:starts[c+1]]
    x0: float
    y0: float
    h: float
    nx: int
    ny: int


def build_grid(points: np.ndarray) -> GridIndex:
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 0:
        raise ValueError("cannot index an empty point set")
    x, y = pts.real, pts.imag
    x0, y0 = float(x.min()), float(y.min())
    wx, wy = float(x.max()) - x0, float(y.max()) - y0
    side = math.ceil(2.0 * math.sqrt(pts.size))
    ext = max(wx, wy)
    h = ext / side if ext > 0 else 1.0
    nx = int(wx / h) + 1
    ny = int(wy / h) + 1
    ix = np.minimum(((x - x0) / h).astype(np.int64), nx - 1)
    iy = np.minimum(((y - y0) / h).astype(np.int64), ny - 1)
    cell = ix * ny + iy
    order = np.argsort(cell, kind="stable")
    starts = np.searchsorted(cell[order], np.arange(nx * ny + 1)).astype(np.int64)
    return GridIndex(
        np.ascontiguousarray(x[order]), np.ascontiguousarray(y[order]), starts, x0, y0, h, nx, ny
    )


@njit(cache=True)
def _scan_cell(px, py, gx, gy, starts, c, best):
    for t in range(starts[c], starts[c + 1]):
        dx = px - gx[t]
        dy = py - gy[t]
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
    return best


@njit(cache=True, parallel=True)
def _nearest_nb(ax, ay, gx, gy, starts, x0, y0, h, nx, ny, out):
    for q in prange(ax.shape[0]):
        px = ax[q]
        py = ay[q]
        cx = int(math.floor((px - x0) / h))
        cy = int(math.floor((py - y0) / h))
        r = max(0, cx - (nx - 1), -cx, cy - (ny - 1), -cy)
        cover = max(cx, nx - 1 - cx, cy, ny - 1 - cy)
        best = math.inf
        while True:
            ilo = max(cx - r, 0)
            ihi = min(cx + r, nx - 1)
            for i in range(ilo, ihi + 1):
                if i == cx - r or i == cx + r:
                    jlo = max(cy - r, 0)
                    jhi = min(cy + r, ny - 1)
                    for j in range(jlo, jhi + 1):
                        best = _scan_cell(px, py, gx, gy, starts, i * ny + j, best)
                else:
                    j = cy - r
                    if 0 <= j < ny:
                        best = _scan_cell(px, py, gx, gy, starts, i * ny + j, best)
                    j = cy + r
                    if r > 0 and 0 <= j < ny:
                        best = _scan_cell(px, py, gx, gy, starts, i * ny + j, best)
            lim = r * h
            if best <= lim * lim or r >= cover:
                break
            r += 1
        out[q] = math.sqrt(best)


def _ring_offsets(r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((1, 2), dtype=np.int64)
    span = np.arange(-r, r + 1)
    top = np.stack([span, np.full_like(span, r)], axis=1)
    bottom = np.stack([span, np.full_like(span, -r)], axis=1)
    inner = np.arange(-r + 1, r)
    left = np.stack([np.full_like(inner, -r), inner], axis=1)
    right = np.stack([np.full_like(inner, r), inner], axis=1)
    return np.concatenate([top, bottom, left, right])


def _nearest_np(ax, ay, g: GridIndex) -> np.ndarray:
    n = ax.size
    best = np.full(n, np.inf)
    cx = np.floor((ax - g.x0) / g.h).astype(np.int64)
    cy = np.floor((ay - g.y0) / g.h).astype(np.int64)
    r0 = np.maximum.reduce([np.zeros(n, np.int64), cx - (g.nx - 1), -cx, cy - (g.ny - 1), -cy])
    cover = np.maximum.reduce([cx, g.nx - 1 - cx, cy, g.ny - 1 - cy])
    # points outside the grid: brute force, in chunks
    far = np.flatnonzero(r0 > 0)
    for lo in range(0, far.size, 2048):
        sel = far[lo : lo + 2048]
        dx = ax[sel, None] - g.x[None, :]
        dy = ay[sel, None] - g.y[None, :]
        best[sel] = (dx * dx + dy * dy).min(axis=1)
    active = np.flatnonzero(r0 == 0)
    r = 0
    while active.size:
        for ox, oy in _ring_offsets(r):
            i = cx[active] + ox
            j = cy[active] + oy
            inside = (i >= 0) & (i < g.nx) & (j >= 0) & (j < g.ny)
            if not inside.any():
                continue
            who = active[inside]
            c = i[inside] * g.ny + j[inside]
            st = g.starts[c]
            cnt = g.starts[c + 1] - st
            top = int(cnt.max()) if cnt.size else 0
            for t in range(top):
                has = cnt > t
                w = who[has]
                k = st[has] + t
                dx = ax[w] - g.x[k]
                dy = ay[w] - g.y[k]
                best[w] = np.minimum(best[w], dx * dx + dy * dy)
        lim = r * g.h
        done = (best[active] <= lim * lim) | (r >= cover[active])
        active = active[~done]
        r += 1
    return np.sqrt(best)


def nearest_distances(points, index: GridIndex) -> np.ndarray:
    """Distance from each of ``points`` to its nearest neighbour in ``index``."""
    pts = np.asarray(points, dtype=complex).ravel()
    ax = np.ascontiguousarray(pts.real)
    ay = np.ascontiguousarray(pts.imag)
    if USE_NUMBA:
        apply_thread_cap()
        out = np.empty(pts.size)
        _nearest_nb(ax, ay, index.x, index.y, index.starts, index.x0, index.y0, index.h,
                    index.nx, index.ny, out)
        return out
    return _nearest_np(ax, ay, index)


def directed_hausdorff(a, b) -> float:
    """sup over ``a`` of the distance to ``b``."""
    a = np.asarray(a, dtype=complex).ravel()
    if a.size == 0:
        return 0.0
    return float(nearest_distances(a, build_grid(b)).max())


# ---------------------------------------------------------------------------
# sets of int64 cell keys
# ---------------------------------------------------------------------------

_EMPTY = np.iinfo(np.int64).min  # never produced by cell keys


@njit(cache=True)
def _slot(key, mask):
    h = np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)
    h ^= h >> np.uint64(29)
    return np.int64(h & np.uint64(mask))


@njit(cache=True)
def _hs_insert_nb(table, keys, added):
    """Insert keys in order; ``added[i]`` is True when ``keys[i]`` was not present."""
    mask = table.size - 1
    n = 0
    for i in range(keys.size):
        k = keys[i]
        j = _slot(k, mask)
        while True:
            t = table[j]
            if t == k:
                added[i] = False
                break
            if t == _EMPTY:
                table[j] = k
                added[i] = True
                n += 1
                break
            j = (j + 1) & mask
    return n


@njit(cache=True)
def _hs_contains_nb(table, keys, out):
    mask = table.size - 1
    for i in range(keys.size):
        k = keys[i]
        j = _slot(k, mask)
        while True:
            t = table[j]
            if t == k:
                out[i] = True
                break
            if t == _EMPTY:
                out[i] = False
                break
            j = (j + 1) & mask


class KeySet:
    """Growing set of int64 keys: open addressing under numba, a sorted array otherwise."""

    def __init__(self, capacity: int = 1024):
        self.size = 0
        if USE_NUMBA:
            self._table = np.full(_pow2(2 * capacity), _EMPTY, dtype=np.int64)
        else:
            self._sorted = np.empty(0, dtype=np.int64)

    def __len__(self) -> int:
        return self.size

    def contains(self, keys: np.ndarray) -> np.ndarray:
        keys = np.ascontiguousarray(keys, dtype=np.int64)
        if USE_NUMBA:
            out = np.empty(keys.size, dtype=bool)
            _hs_contains_nb(self._table, keys, out)
            return out
        if self._sorted.size == 0:
            return np.zeros(keys.size, dtype=bool)
        pos = np.minimum(np.searchsorted(self._sorted, keys), self._sorted.size - 1)
        return self._sorted[pos] == keys

    def insert(self, keys: np.ndarray) -> np.ndarray:
        """Add ``keys``; returns the mask of first occurrences of keys that were new."""
        keys = np.ascontiguousarray(keys, dtype=np.int64)
        if USE_NUMBA:
            if 2 * (self.size + keys.size) > self._table.size:
                self._grow(self.size + keys.size)
            added = np.empty(keys.size, dtype=bool)
            self.size += _hs_insert_nb(self._table, keys, added)
            return added
        uniq, first = np.unique(keys, return_index=True)
        fresh = ~self._known_sorted(uniq)
        added = np.zeros(keys.size, dtype=bool)
        added[first[fresh]] = True
        self._sorted = np.sort(np.concatenate([self._sorted, uniq[fresh]]))
        self.size = self._sorted.size
        return added

    def _known_sorted(self, keys):
        if self._sorted.size == 0:
            return np.zeros(keys.size, dtype=bool)
        pos = np.minimum(np.searchsorted(self._sorted, keys), self._sorted.size - 1)
        return self._sorted[pos] == keys

    def _grow(self, needed: int) -> None:
        old = self._table[self._table != _EMPTY]
        self._table = np.full(_pow2(4 * needed), _EMPTY, dtype=np.int64)
        _hs_insert_nb(self._table, old, np.empty(old.size, dtype=bool))


def _pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


def first_occurrences(keys: np.ndarray) -> np.ndarray:
    """Mask of the first occurrence of every distinct key."""
    return KeySet(max(keys.size, 16)).insert(keys)
