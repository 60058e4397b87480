"""Passing between an operator ``T`` and the bivariate polynomial ``T[(x - z)^n]``.

Also detects the structured special cases of that polynomial: one-point
invariant sets, forms that are linear in one variable, and products of affine
factors (affine iterated function systems).
"""

from __future__ import annotations

import itertools
import math
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ._kernels import roots_batch
from .bipoly import BiPoly
from .errors import ConstantPsi, DegreeTooHigh, DegreeViolation, DomainError, ZeroScale
from .operator import DiffOperator, apply
from .poly import ComplexPoly, cluster_roots, falling_factorial, poly_derive, poly_roots

#: default radius for "all slice roots sit at z0"
ONE_POINT_TOL = 1e-4
#: relative size under which a coefficient counts as zero in structural tests
STRUCT_TOL = 1e-9
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def psi(T: DiffOperator, n: int) -> BiPoly:
    """``T[(x - z)^n] = sum_j (n)_j Q_j(x) (x - z)^(n - j)``."""
    if n < 0:
        raise DomainError("degree must be nonnegative")
    total = BiPoly()
    for j, q in enumerate(T.coeffs[: n + 1]):
        if q.is_zero():
            continue
        term = BiPoly.from_x(q) * BiPoly.x_minus_z_power(n - j)
        total = total + term * falling_factorial(n, j)
    return total


def phi(B: BiPoly, k: int) -> DiffOperator:
    """The exactly solvable operator of order ``<= k`` whose ``psi(., k)`` is ``B``.

    Substituting ``z = x - t`` turns ``B`` into ``sum_j W_j(x) t^(k - j)``; then
    ``Q_j = W_j / (k)_j``.
    """
    if B.total_degree() > k:
        raise DegreeTooHigh(f"total degree {B.total_degree()} exceeds {k}")
    if B.is_zero():
        return DiffOperator()
    c = B.coeffs
    # kappa[a, l] is the coefficient of x^a t^l
    kappa = np.zeros((c.shape[0] + c.shape[1], k + 1), dtype=complex)
    for i in range(c.shape[0]):
        for j in range(c.shape[1]):
            if c[i, j] == 0:
                continue
            for l in range(j + 1):
                kappa[i + j - l, l] += c[i, j] * math.comb(j, l) * (-1) ** l
    coeffs = [ComplexPoly(kappa[:, k - j] / falling_factorial(k, j)) for j in range(k + 1)]
    return DiffOperator(coeffs)


def family_operator(m: int, n: int, Qm: ComplexPoly) -> DiffOperator:
    """``sum_j (-1)^(m-j) C(n-j, n-m) Qm^(m-j) d^j``; every point is invariant for it."""
    if not 0 <= m < n:
        raise DegreeViolation(f"need 0 <= m < n, got m={m}, n={n}")
    if Qm.degree() > m:
        raise DegreeViolation(f"deg Qm = {Qm.degree()} exceeds m = {m}")
    coeffs = [
        poly_derive(Qm, m - j) * ((-1) ** (m - j) * math.comb(n - j, n - m)) for j in range(m + 1)
    ]
    return DiffOperator(coeffs)


# ---------------------------------------------------------------------------
# one-point invariant sets
# ---------------------------------------------------------------------------


class OnePointKind(str, Enum):
    SOLE_INTERSECTION = "SoleIntersection"
    FULL_FIBER = "FullFiber"


class OnePoint(NamedTuple):
    z0: complex
    kind: OnePointKind
    spread: float  # largest distance from a slice root to z0 (0 for full fibers)


class OnePointReport(NamedTuple):
    points: list[OnePoint]
    infinite_family: bool
    family_data: Optional[tuple[int, ComplexPoly]]  # (multiplicity of x - z, Phi)


def split_diagonal_factor(B: BiPoly, struct_tol: float = STRUCT_TOL) -> tuple[int, BiPoly]:
    """Largest ``l`` with ``B = (x - z)^l C`` up to ``struct_tol``; returns ``(l, C)``."""
    scale = B.norm()
    ell, cur = 0, B
    while cur.deg_x() >= 1:
        q, r = cur.divide_x_minus_z()
        if r.norm() > struct_tol * scale:
            break
        ell, cur = ell + 1, q
    return ell, cur


def _slice_check(B: BiPoly, z0: complex, tol: float, struct_tol: float) -> Optional[OnePoint]:
    row = B.slice_matrix([z0])[0]
    scale = B.norm() * max(1.0, abs(z0)) ** max(B.deg_z(), 0)
    if np.abs(row).max(initial=0.0) <= struct_tol * scale:
        return OnePoint(z0, OnePointKind.FULL_FIBER, 0.0)
    s = ComplexPoly(row, trim_rtol=struct_tol)
    if s.degree() < 1:
        return None  # nonzero constant: no roots at all
    r = poly_roots(s).roots
    spread = float(np.abs(r - z0).max())
    if spread <= tol:
        return OnePoint(z0, OnePointKind.SOLE_INTERSECTION, spread)
    return None


def one_point_sets(
    T: DiffOperator, n: int, tol: float = ONE_POINT_TOL, struct_tol: float = STRUCT_TOL
) -> OnePointReport:
    """Points ``z0`` such that ``{z0}`` is invariant for ``T`` at degree ``n``."""
    B = psi(T, n)
    if B.total_degree() <= 0:
        raise ConstantPsi("T[(x - z)^n] is constant; every set is invariant")
    ell, C = split_diagonal_factor(B, struct_tol)
    upper = C.coeffs[1:]
    if ell >= 1 and (upper.size == 0 or np.abs(upper).max() <= struct_tol * B.norm()):
        phi_poly = ComplexPoly(C.coeffs[0], trim_rtol=struct_tol)
        return OnePointReport([], True, (ell, phi_poly))
    candidates: list[complex] = []
    diag = C.diagonal()
    if diag.degree() >= 1:
        candidates.extend(poly_roots(diag).roots)
    if ell >= 1:
        # slices where C is a nonzero constant in x leave (x - z0)^ell alone
        top = C.row(C.deg_x())
        if top.degree() >= 1:
            candidates.extend(poly_roots(top).roots)
    found: list[OnePoint] = []
    for z0, _ in cluster_roots(np.array(candidates, dtype=complex), math.sqrt(tol)):
        hit = _slice_check(B, z0, tol, struct_tol)
        if hit is not None:
            found.append(hit)
    found.sort(key=lambda p: (p.z0.real, p.z0.imag))
    return OnePointReport(found, False, None)


# ---------------------------------------------------------------------------
# linear and affine structure
# ---------------------------------------------------------------------------


class LinearForm(NamedTuple):
    """``(U, V)`` for a polynomial of the shape ``t U - V``."""

    U: ComplexPoly
    V: ComplexPoly

    def common_zeros(self, tol: float = 1e-8) -> list[complex]:
        """Zeros of ``U`` that are also zeros of ``V`` (matched within ``tol``)."""
        if self.U.degree() < 1 or self.V.is_zero():
            return []
        if self.V.degree() < 1:
            return []
        ru = poly_roots(self.U).roots
        rv = poly_roots(self.V).roots
        used = np.zeros(rv.size, dtype=bool)
        out = []
        for r in ru:
            d = np.where(used, np.inf, np.abs(rv - r))
            k = int(np.argmin(d))
            if d[k] <= tol:
                used[k] = True
                out.append(complex(r))
        return out

    def shares_zero(self, tol: float = 1e-8) -> bool:
        return bool(self.common_zeros(tol))


def extract_linear_in_z(B: BiPoly) -> Optional[LinearForm]:
    """``(U, V)`` with ``B = z U(x) - V(x)`` when ``B`` has degree one in ``z``."""
    if B.deg_z() != 1:
        return None
    return LinearForm(B.col(1), -B.col(0))


def extract_linear_in_x(B: BiPoly) -> Optional[LinearForm]:
    """``(U, V)`` with ``B = x U(z) - V(z)`` when ``B`` has degree one in ``x``."""
    if B.deg_x() != 1:
        return None
    return LinearForm(B.row(1), -B.row(0))


def extract_pinned_rational(T: DiffOperator, n: int, alpha) -> LinearForm:
    """``T((x - alpha)^(n-1) (x - z)) = z U - V``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    base = ComplexPoly.linear(alpha) ** (n - 1)
    U = -apply(T, base)
    V = -apply(T, ComplexPoly.x() * base)
    return LinearForm(U, V)


class AffineMap(NamedTuple):
    a: complex
    b: complex

    def __call__(self, z):
        return self.a * z + self.b


def operator_from_affine_ifs(maps: Sequence[AffineMap], scale=1.0) -> DiffOperator:
    """The operator whose ``T[(x - z)^k]`` is ``scale * prod_j (x - (a_j z + b_j))``."""
    scale = complex(scale)
    if scale == 0:
        raise ZeroScale("scale must be nonzero")
    if not maps:
        raise DomainError("need at least one affine map")
    B = BiPoly([[scale]])
    for a, b in maps:
        B = B * BiPoly([[-complex(b), -complex(a)], [1.0, 0.0]])
    return phi(B, len(maps))


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Reorder ``cur`` to minimise the total distance to ``prev``."""
    n = prev.size
    if n <= 7:
        best, best_cost = None, np.inf
        D = np.abs(prev[:, None] - cur[None, :])
        for perm in itertools.permutations(range(n)):
            cost = D[np.arange(n), perm].sum()
            if cost < best_cost:
                best, best_cost = perm, cost
        return cur[list(best)]
    out = np.empty_like(cur)
    free = list(range(n))
    for i in range(n):
        k = min(free, key=lambda j: abs(cur[j] - prev[i]))
        out[i] = cur[k]
        free.remove(k)
    return out


def _fit_branches(B: BiPoly, n: int, radius: float, samples: int, tol: float):
    theta = 0.3 + np.pi * np.arange(samples) / (samples - 1)
    zs = radius * np.exp(1j * theta)
    batch = roots_batch(B.slice_matrix(zs))
    if np.any(batch.degree != n):
        return None
    R = batch.roots[:, :n].copy()
    for t in range(1, samples):
        R[t] = _match(R[t - 1], R[t])
    A = np.stack([zs, np.ones_like(zs)], axis=1)
    maps = []
    for k in range(n):
        x = R[:, k]
        coef, *_ = np.linalg.lstsq(A, x, rcond=None)
        resid = np.abs(A @ coef - x).max()
        if resid > tol * (1.0 + np.abs(x).max()):
            return None
        maps.append(AffineMap(complex(coef[0]), complex(coef[1])))
    return maps


def detect_affine_ifs(B: BiPoly, n: int, tol: float = 1e-8) -> Optional[list[AffineMap]]:
    """Recover ``x = a_j z + b_j`` when ``B`` factors into ``n`` affine branches.

    Slices along half a circle are root-tracked by nearest matching and each
    branch is fitted by least squares.  Returns ``None`` when any fit fails.
    """
    if B.deg_x() != n or n < 1:
        return None
    samples = max(n + 2, 32)
    for radius in (GOLDEN, GOLDEN + 1.0, GOLDEN - 1.0):
        maps = _fit_branches(B, n, radius, samples, tol)
        if maps is not None:
            return sorted(maps, key=lambda m: (abs(m.a), np.angle(m.a)))
    return None
