"""Degree-one operators as rational maps, and plane Julia sets by inverse iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._kernels import KeySet, roots_batch
from .correspondence import LinearForm, extract_linear_in_z, psi
from .dynamics import IterationConfig, Mode, _Cloud, minimal_invariant_set
from .errors import DegenerateImage, DegreeTooLow, NoRepellingFixedPoint
from .geometry import PointCloud, cell_keys, directed_distance, hausdorff
from .operator import DiffOperator
from .poly import ComplexPoly, poly_derive, poly_roots

INF = math.inf
#: points closer than this (relative) are identified in preimage tests
POINT_TOL = 1e-8
REPELLING_SLACK = 1e-9
PARABOLIC_TOL = 1e-6
ROUND_STEPS = 64
DEFAULT_WALKERS = 64
NOVELTY_REFINE = 4
POOL_SIZE = 4096
PATIENCE = 8


def _same(a: complex, b: complex, tol: float = POINT_TOL) -> bool:
    if a == INF or b == INF:
        return a == b
    return abs(a - b) <= tol * (1.0 + abs(a))


def _divide_root(p: ComplexPoly, r: complex) -> ComplexPoly:
    """Quotient of ``p`` by ``x - r`` (synthetic division, remainder dropped)."""
    c = p.coeffs
    q = np.zeros(c.size - 1, dtype=complex)
    acc = 0j
    for i in range(c.size - 1, 0, -1):
        acc = acc * r + c[i]
        q[i - 1] = acc
    return ComplexPoly(q)


class RationalMap:
    """``R = V / U`` with common zeros of ``V`` and ``U`` cancelled."""

    __slots__ = ("num", "den", "cancelled")

    def __init__(self, num: ComplexPoly, den: ComplexPoly, tol: float = POINT_TOL):
        if den.is_zero():
            raise DegenerateImage("denominator is identically zero")
        cancelled = LinearForm(den, num).common_zeros(tol) if not num.is_zero() else []
        for r in cancelled:
            num, den = _divide_root(num, r), _divide_root(den, r)
        self.num, self.den = num, den
        self.cancelled: list[complex] = cancelled

    @property
    def degree(self) -> int:
        return max(self.num.degree(), self.den.degree(), 0)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(x) / self.den(x)

    def at_infinity(self) -> complex:
        dv, du = self.num.degree(), self.den.degree()
        if dv > du:
            return INF
        if dv < du:
            return 0j
        return self.num.lead / self.den.lead

    def value(self, w: complex) -> complex:
        """``R(w)`` on the Riemann sphere, ``math.inf`` standing for infinity."""
        if w == INF:
            return self.at_infinity()
        d = self.den(w)
        if d == 0:
            return INF
        return self.num(w) / d

    def derivative(self, x):
        x = np.asarray(x, dtype=complex)
        V, U = self.num, self.den
        with np.errstate(divide="ignore", invalid="ignore"):
            return (poly_derive(V)(x) * U(x) - V(x) * poly_derive(U)(x)) / U(x) ** 2

    def preimage_poly(self, w: complex) -> ComplexPoly:
        """``V - w U``, whose zeros are the finite preimages of ``w``."""
        return self.num - self.den * w

    def preimages(self, w: complex) -> list[complex]:
        """``R^{-1}(w)`` with multiplicity; ``math.inf`` marks the point at infinity."""
        d = self.degree
        if w == INF:
            p = self.den
            extra = self.num.degree() - self.den.degree()
        else:
            p = self.preimage_poly(w)
            extra = d - max(p.degree(), 0)
        finite = list(poly_roots(p).roots) if p.degree() >= 1 else []
        return finite + [INF] * max(extra, 0)

    def fixed_points(self) -> list[complex]:
        p = self.num - self.den * ComplexPoly.x()
        pts = list(poly_roots(p).roots) if p.degree() >= 1 else []
        if self.num.degree() > self.den.degree():
            pts.append(INF)
        return pts

    def second_iterate(self) -> tuple[ComplexPoly, ComplexPoly]:
        """``(V2, U2)`` with ``R(R(x)) = V2 / U2``."""
        d = self.degree
        V, U = self.num, self.den
        num, den = ComplexPoly.zero(), ComplexPoly.zero()
        for i in range(d + 1):
            block = V**i * U ** (d - i)
            num = num + block * V.coeff(i)
            den = den + block * U.coeff(i)
        return num, den

    def to_json(self) -> dict:
        return {
            "num": [[c.real, c.imag] for c in self.num.coeffs],
            "den": [[c.real, c.imag] for c in self.den.coeffs],
        }

    def __repr__(self):
        return f"RationalMap(num={self.num!r}, den={self.den!r})"


def rational_from_operator(T: DiffOperator) -> RationalMap:
    """``R = V / U`` from ``T(x - z) = z U - V``."""
    form = extract_linear_in_z(psi(T, 1))
    if form is None or form.U.is_zero():
        raise DegenerateImage("T(x - z) does not depend on z")
    return RationalMap(form.V, form.U)


class ExceptionalityReport(NamedTuple):
    nonexceptional: bool
    exceptional_points: list[complex]  # math.inf for the point at infinity
    reason: str
    boundary_case: bool  # deg V == deg U: R(infinity) is finite and nonzero


def _subset(points: list[complex], allowed: list[complex]) -> bool:
    return all(any(_same(p, a) for a in allowed) for p in points)


def _unique(points: list[complex]) -> list[complex]:
    out: list[complex] = []
    for p in points:
        if not any(_same(p, q) for q in out):
            out.append(p)
    return out


def exceptional_points(R: RationalMap) -> list[complex]:
    """Points with finite backward orbit: totally invariant points and 2-cycles."""
    cands = _unique(R.fixed_points() + [INF])
    V2, U2 = R.second_iterate()
    p2 = V2 - U2 * ComplexPoly.x()
    if p2.degree() >= 1:
        cands = _unique(cands + list(poly_roots(p2).roots))
    found: list[complex] = []
    for w in cands:
        pre = _unique(R.preimages(w))
        if _subset(pre, [w]):
            found.append(w)
        elif len(pre) == 1:
            v = pre[0]
            if _subset(_unique(R.preimages(v)), [w, v]) and _subset([R.value(v)], [w]):
                found.extend([w, v])
    return _unique(found)


def is_nonexceptional(R: RationalMap, tol: float = POINT_TOL) -> ExceptionalityReport:
    """Apply the two clauses of non-exceptionality literally."""
    if R.degree < 2:
        raise DegreeTooLow("rational maps of degree <= 1 have no Julia dynamics")
    E = exceptional_points(R)
    boundary = R.num.degree() == R.den.degree()
    finite = [e for e in E if e != INF]
    if finite:
        return ExceptionalityReport(False, E, "finite_exceptional_point", boundary)
    c = R.at_infinity()
    if c == INF:
        return ExceptionalityReport(True, E, "infinity_fixed", boundary)
    pre = [p for p in _unique(R.preimages(c)) if p != INF]
    if _subset(pre, [c]) and pre:
        return ExceptionalityReport(False, E, "value_at_infinity_has_lone_preimage", boundary)
    return ExceptionalityReport(True, E, "clauses_hold", boundary)


# ---------------------------------------------------------------------------
# inverse iteration
# ---------------------------------------------------------------------------


@dataclass
class JuliaSample:
    cloud: PointCloud
    start_points: np.ndarray
    start_kind: str  # repelling_fixed | parabolic_fixed | repelling_cycle | random
    rounds: int
    converged: bool
    notes: list[str] = field(default_factory=list)
    backward_gap: float = math.nan  # sup over preimages of the cloud of the distance to it
    forward_gap: float = math.nan  # the same for the finite forward images


def _pick_start(R: RationalMap, rng: np.random.Generator, avoid: list[complex]):
    fixed = [p for p in R.fixed_points() if p != INF and not any(_same(p, a) for a in avoid)]
    fixed = _unique(fixed)
    if fixed:
        mult = np.abs(R.derivative(np.array(fixed)))
        order = np.argsort(-mult, kind="stable")
        best = int(order[0])
        if mult[best] > 1.0 + REPELLING_SLACK:
            return np.array([fixed[best]]), "repelling_fixed"
        para = [fixed[i] for i in order if abs(mult[i] - 1.0) <= PARABOLIC_TOL]
        if para:
            return np.array(para[:1]), "parabolic_fixed"
    V2, U2 = R.second_iterate()
    p2 = V2 - U2 * ComplexPoly.x()
    if p2.degree() >= 1:
        for w in poly_roots(p2).roots:
            if any(_same(w, f) for f in fixed) or any(_same(w, a) for a in avoid):
                continue
            v = R.value(w)
            if v == INF or _same(v, w):
                continue
            m = abs(R.derivative(w) * R.derivative(v))
            if m > 1.0 + REPELLING_SLACK:
                return np.array([w, v]), "repelling_cycle"
    return np.array([complex(*rng.normal(size=2))]), "random"


def julia_backward(
    R: RationalMap,
    cfg: Optional[IterationConfig] = None,
    walkers: int = DEFAULT_WALKERS,
    strict: bool = False,
) -> JuliaSample:
    """Random inverse iteration from a repelling (or parabolic) fixed point.

    Each walker repeatedly replaces ``z`` by a root of ``V - z U`` drawn
    uniformly from the roots lying in unvisited ``eps``-cells, or from all roots
    when every one is visited.  Without that preference a walk almost never
    follows the long runs of one branch needed to approach a parabolic point.
    The first round of 64 steps is burn-in (uniform, not recorded); afterwards
    rounds are collected until ``stall_window`` rounds add no new ``eps``-cell.
    """
    cfg = cfg or IterationConfig()
    if R.degree < 2:
        raise DegreeTooLow("rational maps of degree <= 1 have no Julia dynamics")
    rng = np.random.default_rng([cfg.rng_seed, 0x4A])
    E = [e for e in exceptional_points(R) if e != INF]
    start, kind = _pick_start(R, rng, E)
    notes: list[str] = []
    if kind != "repelling_fixed":
        if strict:
            raise NoRepellingFixedPoint(f"no repelling fixed point; fallback would be {kind}")
        notes.append(f"no repelling fixed point; started from {kind.replace('_', ' ')}")
    d = R.degree
    V = R.num.padded(d + 1)
    U = R.den.padded(d + 1)
    z = np.resize(start, walkers).astype(complex)
    state = _Cloud(cfg.eps)
    if kind != "random":
        state.add(np.atleast_1d(np.complex128(start)))
    idle = 0
    rounds = 0
    converged = False
    # novelty is judged on a finer grid than the cloud so that walkers keep
    # being steered where successive preimages move by less than eps
    fine = cfg.eps / NOVELTY_REFINE
    seen = KeySet()
    seen.insert(cell_keys(state.points, fine))
    rows = np.arange(walkers)
    # recent discoveries; a walker that goes PATIENCE steps without one jumps back here
    pool = np.empty(POOL_SIZE, dtype=complex)
    pool_len = pool_head = 0
    miss = np.zeros(walkers, dtype=np.int64)
    # backward iterates of a fixed point or cycle are already in the Julia set
    burn_in_rounds = 1 if kind == "random" else 0
    for rounds in range(cfg.max_iter + burn_in_rounds):
        burn_in = rounds < burn_in_rounds
        u = rng.random((ROUND_STEPS, walkers))
        visited = np.empty((ROUND_STEPS, walkers), dtype=complex)
        for s in range(ROUND_STEPS):
            C = V[None, :] - z[:, None] * U[None, :]
            roots = roots_batch(C).roots
            ok = np.isfinite(roots)
            if not burn_in:
                keys = cell_keys(np.where(ok, roots, 0.0), fine).reshape(roots.shape)
                novel = ok & ~seen.contains(keys.ravel()).reshape(keys.shape)
                # prefer roots in cells nobody has visited yet
                ok = np.where(novel.any(axis=1)[:, None], novel, ok)
            count = ok.sum(axis=1)
            pick = np.minimum((u[s] * count).astype(np.int64), np.maximum(count - 1, 0))
            # index of the pick-th allowed root in each row
            rank = np.cumsum(ok, axis=1) - 1
            col = np.argmax(ok & (rank == pick[:, None]), axis=1)
            z = np.where(count == 0, z, roots[rows, col])
            visited[s] = z
            if burn_in:
                continue
            hit = novel[rows, col]
            seen.insert(keys[rows, col][hit])
            for w in z[hit]:
                pool[pool_head] = w
                pool_head = (pool_head + 1) % POOL_SIZE
            pool_len = min(pool_len + int(hit.sum()), POOL_SIZE)
            miss = np.where(hit, 0, miss + 1)
            jump = miss >= PATIENCE
            if pool_len and jump.any():
                z[jump] = pool[rng.integers(0, pool_len, int(jump.sum()))]
                miss[jump] = 0
        if burn_in:
            continue
        fresh, _ = state.add(visited.ravel())
        idle = idle + 1 if fresh.size == 0 else 0
        if idle >= cfg.stall_window:
            converged = True
            break
    if not converged:
        notes.append(f"cloud still growing after {rounds} rounds")
    cloud = state.cloud()
    back, fwd = invariance_gaps(R, cloud)
    return JuliaSample(cloud, start, kind, rounds, converged, notes, back, fwd)


def invariance_gaps(R: RationalMap, cloud: PointCloud) -> tuple[float, float]:
    """How far ``R^{-1}(J)`` and ``R(J)`` stray from the sample ``J``."""
    J = cloud.points
    if J.size == 0:
        return math.nan, math.nan
    d = R.degree
    V, U = R.num.padded(d + 1), R.den.padded(d + 1)
    pre = roots_batch(V[None, :] - J[:, None] * U[None, :]).roots.ravel()
    fwd = R(J)
    gaps = []
    for pts in (pre, fwd):
        pts = pts[np.isfinite(pts)]
        gaps.append(directed_distance(pts, J) if pts.size else 0.0)
    return gaps[0], gaps[1]


class CrossValidation(NamedTuple):
    hausdorff: float
    report: str
    passed: bool
    exceptionality: ExceptionalityReport
    engine_cloud: PointCloud
    julia_cloud: PointCloud
    candidates: list[complex]
    sample: JuliaSample


def cross_validate_m1(T: DiffOperator, cfg: Optional[IterationConfig] = None) -> CrossValidation:
    """Compare the degree-one Hutchinson cloud with the backward Julia sample."""
    cfg = cfg or IterationConfig()
    R = rational_from_operator(T)
    exc = is_nonexceptional(R)
    run = minimal_invariant_set(T, 1, Mode.HUTCHINSON, cfg)
    sample = julia_backward(R, cfg)
    dist = hausdorff(run.cloud, sample.cloud)
    passed = dist <= 3 * cfg.eps
    finite_exc = [e for e in exc.exceptional_points if e != INF]
    lines = [
        f"R = V/U with deg V = {R.num.degree()}, deg U = {R.den.degree()}",
        f"engine status {run.status.value}, {len(run.cloud)} points; "
        f"julia sample {len(sample.cloud)} points from {sample.start_kind.replace('_', ' ')}",
        f"hausdorff {dist:.6g} against threshold {3 * cfg.eps:.6g}: {'pass' if passed else 'fail'}",
    ]
    if not exc.nonexceptional:
        lines.append(
            "R is exceptional; coincidence is not guaranteed. Minimal candidates: "
            + ", ".join(f"{{{complex(e)}}}" for e in finite_exc)
            + ", and the plane Julia set sampled above"
        )
    if exc.boundary_case:
        lines.append("deg V == deg U: the clause at R(infinity) was evaluated literally")
    return CrossValidation(dist, "\n".join(lines), passed, exc, run.cloud, sample.cloud, finite_exc, sample)
