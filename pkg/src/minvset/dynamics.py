"""Point-cloud iteration towards minimal invariant sets.

Two steppers share one engine:

* ``theta_step`` -- the Hutchinson map: every ``z`` in the cloud is replaced by
  the roots of ``T[(x - z)^n]``.
* ``tau_step`` -- roots of ``T(p)`` for degree-``n`` polynomials ``p`` whose roots
  lie in the cloud, sampled (structured basis plus random root multisets).

Clouds only grow: a step adds images that land in empty ``eps``-cells.  The
engine stops on a stall of sub-``eps`` Hausdorff movement, on escape through
``r_max``, or at ``max_iter``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ._kernels import KeySet, first_occurrences, roots_batch
from .bipoly import BiPoly
from .correspondence import STRUCT_TOL, one_point_sets, psi, split_diagonal_factor
from .errors import (
    ConstantLeadingCoefficient,
    ConstantPsi,
    DegreeViolation,
    DomainError,
    EmptyCloud,
    NotExactlySolvable,
)
from .geometry import (
    PointCloud,
    cell_keys,
    dist_to_polygon,
    directed_distance,
    grid_snap,
    lex_sort,
)
from .operator import (
    DiffOperator,
    action_matrix,
    eigenpolynomial,
    fundamental_polygon,
    is_exactly_solvable,
    is_nondegenerate,
    symbol_eigenvalues,
)
from .poly import poly_roots

GHOST_REFINE = 16  # ghosts closer than eps / GHOST_REFINE are merged
#: branch multipliers up to this bound count as attracting or neutral
MULTIPLIER_SLACK = 1e-9
DOMINANCE_RTOL = 1e-9
ROOT_OF_UNITY_TOL = 1e-9
ROOT_OF_UNITY_MAX_ORDER = 64


class Mode(str, Enum):
    HUTCHINSON = "hutchinson"
    FULL = "full"


class Status(str, Enum):
    CONVERGED = "Converged"
    UNBOUNDED = "Unbounded"
    EMPTY = "Empty"
    MAX_ITER = "MaxIterReached"


@dataclass(frozen=True)
class IterationConfig:
    max_iter: int = 200
    r_max: Optional[float] = None  # None: 10 (1 + max|root of Q_k| + max|seed|)
    eps: float = 1e-3
    stall_window: int = 3
    tau_samples: int = 2000
    rng_seed: int = 0
    root_tol: float = 1e-12
    lookahead: int = 5  # duplicate generations still explored (Hutchinson path)

    def validate(self, mode: Mode = Mode.HUTCHINSON, n: int = 1) -> None:
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise DomainError("r_max must be positive")
        if self.lookahead < 0:
            raise DomainError("lookahead must be nonnegative")
        if self.max_iter < 1 or self.stall_window < 1:
            raise DomainError("max_iter and stall_window must be at least 1")
        if mode is Mode.FULL and self.tau_samples < n + 1:
            raise DomainError("tau_samples must be at least n + 1 in full mode")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IterationReport:
    status: Status
    cloud: PointCloud
    deltas: list[float]
    escaped_fraction: float
    steps: int
    mode: Mode
    n: int
    r_max: float
    seeds: np.ndarray
    escaped_total: int = 0
    heuristic: bool = False
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "mode": self.mode.value,
            "n": self.n,
            "steps": self.steps,
            "points": len(self.cloud),
            "eps": self.cloud.resolution,
            "r_max": self.r_max,
            "escaped_fraction": self.escaped_fraction,
            "escaped_total": self.escaped_total,
            "deltas": list(self.deltas),
            "heuristic": self.heuristic,
            "notes": list(self.notes),
        }


class ExistenceReport(NamedTuple):
    unique_dominant: bool
    dominant_index: Optional[int]
    one_point_free: bool
    unbounded_hint: bool
    infinite_hint: bool
    lambdas: np.ndarray

    @property
    def theorem_hypotheses_hold(self) -> bool:
        """Both existence hypotheses: a unique dominant eigenvalue at index >= 1, no one-point sets."""
        return bool(
            self.unique_dominant and self.dominant_index is not None
            and self.dominant_index >= 1 and self.one_point_free
        )


# ---------------------------------------------------------------------------
# slices and images
# ---------------------------------------------------------------------------


class ImageBatch(NamedTuple):
    points: np.ndarray  # finite images with |x| <= r_max
    escaped: int  # images beyond r_max


def _slice_scale(B: BiPoly, z: np.ndarray) -> np.ndarray:
    return B.norm() * np.maximum(1.0, np.abs(z)) ** max(B.deg_z(), 0)


def _roots_of_rows(C: np.ndarray, zero_rows: np.ndarray, r_max: float) -> ImageBatch:
    if C.shape[0] == 0 or C.shape[1] <= 1:
        return ImageBatch(np.empty(0, dtype=complex), 0)
    C = C.copy()
    C[zero_rows] = 0.0
    roots = roots_batch(C).roots.ravel()
    roots = roots[np.isfinite(roots)]  # missing roots of degree-dropping rows
    far = np.abs(roots) > r_max
    return ImageBatch(roots[~far], int(far.sum()))


def theta_images(B: BiPoly, zs: np.ndarray, r_max: float = math.inf) -> ImageBatch:
    """Roots of ``B(x, z)`` for every ``z``; identically zero slices give nothing."""
    zs = np.asarray(zs, dtype=complex).ravel()
    S = B.slice_matrix(zs)
    if S.shape[1] == 0:
        return ImageBatch(np.empty(0, dtype=complex), 0)
    zero = np.abs(S).max(axis=1) <= STRUCT_TOL * _slice_scale(B, zs)
    return _roots_of_rows(S, zero, r_max)


def theta_step(T: DiffOperator, n: int, cloud: PointCloud, r_max: float = math.inf) -> PointCloud:
    """One Hutchinson step: the cloud together with all slice roots, snapped."""
    if n < 1:
        raise DomainError("n must be at least 1")
    img = theta_images(psi(T, n), cloud.points, r_max)
    return grid_snap(np.concatenate([cloud.points, img.points]), cloud.resolution)


def _coeffs_from_roots(R: np.ndarray) -> np.ndarray:
    """Row ``m`` = ascending coefficients of ``prod_k (x - R[m, k])``."""
    m, n = R.shape
    C = np.zeros((m, n + 1), dtype=complex)
    C[:, 0] = 1.0
    for k in range(n):
        r = R[:, k : k + 1]
        nxt = np.zeros_like(C)
        nxt[:, 1:] = C[:, :-1]
        nxt -= r * C
        C = nxt
    return C


def _draw_tau_rows(
    cloud: np.ndarray, frontier: np.ndarray, n: int, samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Root multisets for one full-mode step, drawn before any evaluation."""
    N = cloud.size
    if math.comb(N + n - 1, n) <= samples:
        return cloud[np.array(list(combinations_with_replacement(range(N), n)), dtype=np.int64)]
    base = frontier if frontier.size else cloud
    pairs = min(samples, base.size * N)
    u = base[rng.integers(0, base.size, size=pairs)]
    v = cloud[rng.integers(0, N, size=pairs)]
    blocks = []
    for j in range(1, n):
        blocks.append(np.concatenate([np.repeat(u[:, None], j, 1), np.repeat(v[:, None], n - j, 1)], 1))
    blocks.append(cloud[rng.integers(0, N, size=(samples, n))])
    if frontier.size:
        blocks.append(np.repeat(frontier[:, None], n, 1))
    return np.concatenate(blocks, axis=0)


def tau_images(
    A: np.ndarray, rows: np.ndarray, r_max: float = math.inf
) -> ImageBatch:
    """Roots of ``T(p)`` for the polynomials with root rows ``rows``; ``A`` is the action matrix."""
    C = _coeffs_from_roots(rows) @ A.T
    zero = np.abs(C).max(axis=1) <= STRUCT_TOL * np.abs(A).max() * np.abs(
        _coeffs_from_roots(rows)
    ).max(axis=1)
    return _roots_of_rows(C, zero, r_max)


def tau_step(
    T: DiffOperator, n: int, cloud: PointCloud, cfg: Optional[IterationConfig] = None, step: int = 0
) -> PointCloud:
    """One sampled step of the full invariance closure."""
    cfg = cfg or IterationConfig()
    if cloud.is_empty():
        raise EmptyCloud("tau_step needs a nonempty cloud")
    if n < 1:
        raise DomainError("n must be at least 1")
    r_max = cfg.r_max if cfg.r_max is not None else math.inf
    if n == 1:
        return theta_step(T, 1, cloud, r_max)
    rng = np.random.default_rng([cfg.rng_seed, step])
    rows = _draw_tau_rows(cloud.points, cloud.points, n, cfg.tau_samples, rng)
    img = tau_images(action_matrix(T, n), rows, r_max)
    return grid_snap(np.concatenate([cloud.points, img.points]), cloud.resolution)


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------


def _hutchinson_seeds(T: DiffOperator, n: int) -> np.ndarray:
    B = psi(T, n)
    if B.is_zero():
        return np.empty(0, dtype=complex)
    _, C = split_diagonal_factor(B)
    diag = C.diagonal()
    if diag.degree() < 1:
        return np.empty(0, dtype=complex)
    z = poly_roots(diag).roots
    # keep fixed points whose local branch z -> x(z) does not expand
    gx = np.abs(C.dx()(z, z))
    gz = np.abs(C.dz()(z, z))
    keep = gz <= (1.0 + MULTIPLIER_SLACK) * gx
    keep |= (gx == 0) & (gz == 0)
    return z[keep] if keep.any() else z


def seed_points(T: DiffOperator, n: int, mode: Mode = Mode.HUTCHINSON) -> np.ndarray:
    """Starting points: fixed points of the Hutchinson map, or eigenpolynomial roots."""
    mode = Mode(mode)
    if mode is Mode.HUTCHINSON:
        z = _hutchinson_seeds(T, n)
        if z.size:
            return lex_sort(z)
    return lex_sort(poly_roots(eigenpolynomial(T, n)).roots)


def default_r_max(T: DiffOperator, seeds: np.ndarray) -> float:
    lead = T.leading
    top = float(np.abs(poly_roots(lead).roots).max(initial=0.0)) if lead.degree() >= 1 else 0.0
    s = float(np.abs(seeds).max(initial=0.0))
    return 10.0 * (1.0 + top + s)


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


class _Cloud:
    """Growing set of cell representatives; existing cells keep their point."""

    def __init__(self, eps: float):
        self.eps = eps
        self._chunks: list[np.ndarray] = []
        self._keys = KeySet()

    @property
    def points(self) -> np.ndarray:
        if len(self._chunks) != 1:
            self._chunks = [np.concatenate(self._chunks)] if self._chunks else [np.empty(0, complex)]
        return self._chunks[0]

    def add(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Insert ``z``; returns the new representatives and a mask of the accepted inputs."""
        accepted = np.zeros(z.size, dtype=bool)
        idx = np.flatnonzero(np.isfinite(z))
        if idx.size == 0:
            return np.empty(0, dtype=complex), accepted
        k = cell_keys(z[idx], self.eps)
        new = ~self._keys.contains(k)
        idx, k = idx[new], k[new]
        # the lexicographically smallest candidate of each new cell
        order = np.lexsort((z[idx].imag, z[idx].real, k))
        idx, k = idx[order], k[order]
        first = np.ones(k.size, dtype=bool)
        first[1:] = k[1:] != k[:-1]
        idx, k = idx[first], k[first]
        accepted[idx] = True
        if idx.size:
            self._keys.insert(k)
            self._chunks.append(z[idx])
        return lex_sort(z[idx]), accepted

    def has(self, z: np.ndarray) -> np.ndarray:
        return self._keys.contains(cell_keys(z, self.eps))

    def cloud(self) -> PointCloud:
        return PointCloud(lex_sort(self.points.copy()), self.eps)


def _thin(z: np.ndarray, h: float) -> np.ndarray:
    """One point per ``h``-cell, first occurrence kept."""
    if z.size == 0:
        return z
    return z[first_occurrences(cell_keys(z, h))]


def _explore(B: BiPoly, state: _Cloud, frontier: np.ndarray, ghosts: list, r_max: float):
    """One Hutchinson step over the frontier and the ghost generations.

    A ghost is an image that fell into an occupied cell.  Near a critical value
    the inverse branches expand, so a ghost's descendants can still open new
    cells far from those of the cell's representative; ``ghosts[b]`` holds the
    ghosts that may spawn ``b`` further ghost generations.
    """
    img = theta_images(B, frontier, r_max)
    groups = [theta_images(B, g, r_max).points for g in ghosts] + [img.points]
    fresh, accepted = state.add(np.concatenate(groups))
    # children of generation b join generation b - 1; the frontier counts as the top one
    nxt, start = [], 0
    for b, pts in enumerate(groups):
        stop = start + pts.size
        if b > 0:
            nxt.append(_thin(pts[~accepted[start:stop]], state.eps / GHOST_REFINE))
        start = stop
    return img, fresh, nxt


def minimal_invariant_set(
    T: DiffOperator,
    n: int,
    mode: Mode = Mode.HUTCHINSON,
    cfg: Optional[IterationConfig] = None,
    seeds: Optional[Sequence[complex]] = None,
) -> IterationReport:
    """Iterate from the seeds until the cloud stalls, escapes, or ``max_iter`` is hit."""
    mode = Mode(mode)
    cfg = cfg or IterationConfig()
    cfg.validate(mode, n)
    if n < 1:
        raise DomainError("n must be at least 1")
    notes: list[str] = []
    if seeds is None:
        seeds = seed_points(T, n, mode)
    seeds = lex_sort(np.asarray(seeds, dtype=complex).ravel())
    r_max = cfg.r_max if cfg.r_max is not None else default_r_max(T, seeds)
    heuristic = True
    if is_exactly_solvable(T):
        try:
            heuristic = not existence_check(T, n).theorem_hypotheses_hold
        except ConstantPsi:
            heuristic = True
    if heuristic:
        notes.append("existence of the minimal set is not guaranteed here; result is heuristic")
    full = mode is Mode.FULL and n > 1
    B = psi(T, n)
    A = action_matrix(T, n) if full else None

    state = _Cloud(cfg.eps)
    inside = seeds[np.abs(seeds) <= r_max]
    frontier, _ = state.add(inside)
    escaped_total = int(seeds.size - inside.size)
    deltas: list[float] = []
    frac = 0.0
    if state.points.size == 0:
        return IterationReport(Status.EMPTY, state.cloud(), deltas, 1.0 if seeds.size else 0.0, 0,
                               mode, n, r_max, seeds, escaped_total, heuristic, notes)
    status = Status.MAX_ITER
    step = 0
    ghosts = [np.empty(0, dtype=complex)] * cfg.lookahead
    for step in range(1, cfg.max_iter + 1):
        if full:
            rng = np.random.default_rng([cfg.rng_seed, step])
            rows = _draw_tau_rows(state.points, frontier, n, cfg.tau_samples, rng)
            img = tau_images(A, rows, r_max)
            before = state.points
            fresh, _ = state.add(img.points)
        else:
            before = state.points
            img, fresh, ghosts = _explore(B, state, frontier, ghosts, r_max)
        delta = directed_distance(fresh, before) if fresh.size else 0.0
        deltas.append(delta)
        escaped_total += img.escaped
        denom = img.escaped + fresh.size
        frac = img.escaped / denom if denom else 0.0
        frontier = fresh
        if frac > 0.5:
            status = Status.UNBOUNDED
            break
        window = deltas[-cfg.stall_window :]
        # a deterministic run also waits until its images open no new cell:
        # near a parabolic point the set grows by less than eps per step for a long time
        settled = full or (frontier.size == 0 and not any(g.size for g in ghosts))
        if len(window) == cfg.stall_window and max(window) < cfg.eps and settled:
            status = Status.CONVERGED
            break
    return IterationReport(status, state.cloud(), deltas, frac, step, mode, n, r_max, seeds,
                           escaped_total, heuristic, notes)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def _near_root_of_unity(w: complex) -> bool:
    if abs(abs(w) - 1.0) > ROOT_OF_UNITY_TOL:
        return False
    turns = np.angle(w) / (2 * np.pi)
    for q in range(1, ROOT_OF_UNITY_MAX_ORDER + 1):
        if abs(turns * q - round(turns * q)) * 2 * np.pi <= ROOT_OF_UNITY_TOL * q:
            return True
    return False


def existence_check(T: DiffOperator, n: int) -> ExistenceReport:
    """Spectral and one-point hypotheses for a unique minimal invariant set."""
    if not is_exactly_solvable(T):
        raise NotExactlySolvable("existence_check needs an exactly solvable operator")
    lam = symbol_eigenvalues(T, n).lambdas
    ell = _dominant_index(lam)
    unique = ell is not None
    try:
        rep = one_point_sets(T, n)
        one_point_free = not rep.infinite_family and not rep.points
    except ConstantPsi:
        one_point_free = False
    unbounded = unique and ell < n
    return ExistenceReport(unique, ell, one_point_free, bool(unbounded), _infinite_hint(lam, n), lam)


class BoundednessReport(NamedTuple):
    unbounded: bool  # every invariant set is unbounded
    infinite: bool  # every invariant set is infinite
    dominant_index: Optional[int]
    lambdas: np.ndarray


def boundedness_analysis(T: DiffOperator, n: int) -> BoundednessReport:
    """The spectral (un)boundedness and infiniteness tests alone, without the one-point search."""
    if not is_exactly_solvable(T):
        raise NotExactlySolvable("boundedness_analysis needs an exactly solvable operator")
    lam = symbol_eigenvalues(T, n).lambdas
    ell = _dominant_index(lam)
    return BoundednessReport(ell is not None and ell < n, _infinite_hint(lam, n), ell, lam)


def _dominant_index(lam: np.ndarray) -> Optional[int]:
    mod = np.abs(lam)
    top = mod.max()
    near = np.flatnonzero(mod >= top * (1.0 - DOMINANCE_RTOL)) if top > 0 else np.arange(lam.size)
    return int(near[0]) if near.size == 1 else None


def _infinite_hint(lam: np.ndarray, n: int) -> bool:
    if lam[n] == 0:
        return False
    return any(lam[l] != 0 and not _near_root_of_unity(lam[l] / lam[n]) for l in range(n))


class ConvergenceRow(NamedTuple):
    n: int
    sup_out: float
    coverage: float
    report: IterationReport


def convergence_study(
    T: DiffOperator, n_list: Sequence[int], cfg: Optional[IterationConfig] = None
) -> list[ConvergenceRow]:
    """Full-mode clouds for each ``n`` against the fundamental polygon."""
    if T.is_zero() or T.leading.degree() < 1:
        raise ConstantLeadingCoefficient("leading coefficient must be nonconstant")
    if not is_nondegenerate(T):
        raise DegreeViolation("operator is degenerate")
    lead_roots = poly_roots(T.leading).roots
    mult = [k for _, k in poly_roots(T.leading).distinct(1e-6)]
    if lead_roots.size and min(mult) > 1:
        raise DegreeViolation("leading coefficient needs a simple zero")
    P = fundamental_polygon(T)
    rows = []
    for n in n_list:
        rep = minimal_invariant_set(T, n, Mode.FULL, cfg)
        if rep.cloud.is_empty():
            rows.append(ConvergenceRow(n, math.inf, math.inf, rep))
            continue
        sup_out, coverage = dist_to_polygon(rep.cloud, P)
        rows.append(ConvergenceRow(n, sup_out, coverage, rep))
    return rows
