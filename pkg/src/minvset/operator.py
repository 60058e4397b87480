"""Linear differential operators ``T = sum_j Q_j(x) d^j/dx^j`` with polynomial coefficients."""

from __future__ import annotations

from math import comb, factorial
from numbers import Number
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    ConstantLeadingCoefficient,
    DegreeViolation,
    NotExactlySolvable,
    ResonantSpectrum,
    SingularRestriction,
    ZeroOperator,
)
from .poly import ComplexPoly, falling_factorial, poly_derive, poly_roots

#: relative tolerance under which two eigenvalues count as equal
RESONANCE_RTOL = 1e-9


class DiffOperator:
    """Coefficient list ``Q_0 .. Q_k``; trailing zero coefficients are dropped."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        polys = [c if isinstance(c, ComplexPoly) else ComplexPoly(c) for c in coeffs]
        while polys and polys[-1].is_zero():
            polys.pop()
        self.coeffs: tuple[ComplexPoly, ...] = tuple(polys)

    @classmethod
    def identity(cls) -> "DiffOperator":
        return cls([ComplexPoly.const(1.0)])

    @classmethod
    def multiplication(cls, p) -> "DiffOperator":
        return cls([p])

    @classmethod
    def derivative(cls, order: int = 1) -> "DiffOperator":
        return cls([ComplexPoly.zero()] * order + [ComplexPoly.const(1.0)])

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def q(self, j: int) -> ComplexPoly:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else ComplexPoly.zero()

    @property
    def leading(self) -> ComplexPoly:
        if self.is_zero():
            raise ZeroOperator("the zero operator has no leading coefficient")
        return self.coeffs[-1]

    def __call__(self, p: ComplexPoly) -> ComplexPoly:
        return apply(self, p)

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        other = _coerce(other)
        k = max(len(self.coeffs), len(other.coeffs))
        return DiffOperator([self.q(j) + other.q(j) for j in range(k)])

    __radd__ = __add__

    def __neg__(self) -> "DiffOperator":
        return DiffOperator([-c for c in self.coeffs])

    def __sub__(self, other) -> "DiffOperator":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "DiffOperator":
        return _coerce(other) - self

    def __mul__(self, scalar) -> "DiffOperator":
        if not isinstance(scalar, Number):
            return NotImplemented
        return DiffOperator([c * scalar for c in self.coeffs])

    __rmul__ = __mul__

    def __matmul__(self, other: "DiffOperator") -> "DiffOperator":
        return compose(self, other)

    def allclose(self, other: "DiffOperator", atol: float = 1e-12) -> bool:
        k = max(len(self.coeffs), len(other.coeffs))
        return all(self.q(j).allclose(other.q(j), atol) for j in range(k))

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        terms = ", ".join(repr([complex(c) for c in q.coeffs]) for q in self.coeffs)
        return f"DiffOperator([{terms}])"


def _coerce(value) -> DiffOperator:
    if isinstance(value, DiffOperator):
        return value
    if isinstance(value, Number):
        return DiffOperator([ComplexPoly.const(value)])
    if isinstance(value, ComplexPoly):
        return DiffOperator.multiplication(value)
    raise TypeError(f"cannot treat {type(value).__name__} as an operator")


class SpectrumSlice(NamedTuple):
    lambdas: np.ndarray  # lambda_0 .. lambda_n
    n: int


class OperatorMatrix(NamedTuple):
    entries: np.ndarray  # column j = coordinates of T(x^j) up to x^n
    overflow: bool  # True when some T(x^j) had terms above x^n


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def fuchs_index(T: DiffOperator) -> int:
    """``max_j (deg Q_j - j)`` over the nonzero coefficients."""
    if T.is_zero():
        raise ZeroOperator("the Fuchs index of the zero operator is undefined")
    return max(q.degree() - j for j, q in enumerate(T.coeffs) if not q.is_zero())


def is_exactly_solvable(T: DiffOperator) -> bool:
    return fuchs_index(T) == 0


def is_nondegenerate(T: DiffOperator) -> bool:
    return T.leading.degree() - T.order == fuchs_index(T)


def _require_exactly_solvable(T: DiffOperator) -> None:
    if not is_exactly_solvable(T):
        raise NotExactlySolvable(f"Fuchs index is {fuchs_index(T)}, expected 0")


# ---------------------------------------------------------------------------
# action
# ---------------------------------------------------------------------------


def apply(T: DiffOperator, p: ComplexPoly) -> ComplexPoly:
    """``sum_j Q_j p^(j)``."""
    out = ComplexPoly.zero()
    for j, q in enumerate(T.coeffs):
        if j > p.degree():
            break
        if not q.is_zero():
            out = out + q * poly_derive(p, j)
    return out


def action_matrix(T: DiffOperator, n: int) -> np.ndarray:
    """Matrix of ``T`` from ``C_n[x]`` to ``C_m[x]`` with ``m`` large enough for the image.

    Column ``j`` holds the full coefficient vector of ``T(x^j)``; nothing is
    truncated, so ``A @ p`` is the exact image of the coefficient vector ``p``.
    """
    rise = 0
    for j, q in enumerate(T.coeffs):
        if not q.is_zero():
            rise = max(rise, q.degree() - j)
    rows = n + rise + 1
    A = np.zeros((rows, n + 1), dtype=complex)
    for j in range(n + 1):
        for i, q in enumerate(T.coeffs[: j + 1]):
            if q.is_zero():
                continue
            f = falling_factorial(j, i)
            lo = j - i
            A[lo : lo + q.coeffs.size, j] += f * q.coeffs
    return A


def matrix_on_Cn(T: DiffOperator, n: int) -> OperatorMatrix:
    """``(n+1) x (n+1)`` restriction to the monomial basis, with an overflow flag."""
    A = action_matrix(T, n)
    overflow = bool(np.any(A[n + 1 :] != 0))
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[: min(A.shape[0], n + 1)] = A[: n + 1]
    return OperatorMatrix(M, overflow)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


def symbol_eigenvalues(T: DiffOperator, n: int) -> SpectrumSlice:
    """``lambda_i = sum_j c_j (i)_j`` with ``c_j`` the ``x^j`` coefficient of ``Q_j``."""
    _require_exactly_solvable(T)
    tops = [q.coeff(j) for j, q in enumerate(T.coeffs)]
    lam = np.zeros(n + 1, dtype=complex)
    for i in range(n + 1):
        lam[i] = sum(c * falling_factorial(i, j) for j, c in enumerate(tops) if j <= i)
    return SpectrumSlice(lam, n)


def _close(a: complex, b: complex, rtol: float = RESONANCE_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


def eigenpolynomial(T: DiffOperator, n: int) -> ComplexPoly:
    """Monic degree-``n`` eigenpolynomial by back-substitution in the monomial basis."""
    _require_exactly_solvable(T)
    M = matrix_on_Cn(T, n).entries
    lam = M[n, n]
    for i in range(n):
        if _close(M[i, i], lam):
            raise ResonantSpectrum(f"lambda_{i} equals lambda_{n} = {complex(lam)}")
    p = np.zeros(n + 1, dtype=complex)
    p[n] = 1.0
    for i in range(n - 1, -1, -1):
        p[i] = -(M[i, i + 1 :] @ p[i + 1 :]) / (M[i, i] - lam)
    return ComplexPoly(p)


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------


def compose(T1: DiffOperator, T2: DiffOperator) -> DiffOperator:
    """``T1 o T2`` by the Leibniz rule ``(Q d^a)(R d^b) = Q sum_i C(a,i) R^(i) d^(a+b-i)``."""
    if T1.is_zero() or T2.is_zero():
        return DiffOperator()
    out = [ComplexPoly.zero()] * (T1.order + T2.order + 1)
    for a, Q in enumerate(T1.coeffs):
        if Q.is_zero():
            continue
        for b, R in enumerate(T2.coeffs):
            if R.is_zero():
                continue
            for i in range(min(a, R.degree()) + 1):
                out[a + b - i] = out[a + b - i] + Q * poly_derive(R, i) * comb(a, i)
    return DiffOperator(out)


def operator_from_eigenpairs(polys: Sequence[ComplexPoly], lambdas: Sequence) -> DiffOperator:
    """The exactly solvable operator of order ``<= k`` with ``T p_j = lambda_j p_j``.

    Coefficients are solved one at a time: ``Q_0 = lambda_0`` and
    ``Q_j = (lambda_j p_j - sum_{i<j} Q_i p_j^(i)) / j!``.
    """
    if len(polys) != len(lambdas):
        raise DegreeViolation("need one eigenvalue per polynomial")
    for j, p in enumerate(polys):
        if p.degree() != j or abs(p.lead - 1.0) > 1e-12:
            raise DegreeViolation(f"polynomial {j} must be monic of degree {j}")
    Q: list[ComplexPoly] = []
    for j, (p, lam) in enumerate(zip(polys, lambdas)):
        rest = p * complex(lam)
        for i, qi in enumerate(Q):
            rest = rest - qi * poly_derive(p, i)
        # p^(j) = j! exactly for a monic degree-j polynomial
        Q.append(rest / factorial(j))
    return DiffOperator(Q)


def fundamental_polygon(T: DiffOperator):
    """Convex hull of the zeros of the leading coefficient."""
    from .geometry import convex_hull

    lead = T.leading
    if lead.degree() < 1:
        raise ConstantLeadingCoefficient("leading coefficient has no zeros")
    return convex_hull(poly_roots(lead).roots)


def detect_scalar_power(
    T: DiffOperator, n: int, k_max: int = 12, tol: float = 1e-9
) -> Optional[tuple[int, complex]]:
    """Smallest ``k <= k_max`` with ``M^k = alpha^k I`` on ``C_n[x]``, ``alpha = M[n, n]``."""
    mat = matrix_on_Cn(T, n)
    if mat.overflow:
        raise SingularRestriction("T does not preserve C_n[x]")
    M = mat.entries
    if np.linalg.matrix_rank(M) < n + 1:
        raise SingularRestriction("restriction of T to C_n[x] is singular")
    alpha = complex(M[n, n])
    P = np.eye(n + 1, dtype=complex)
    eye = np.eye(n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, k_max + 1):
            P = P @ M
            if not np.all(np.isfinite(P)):
                return None
            if np.abs(P - alpha**k * eye).max() <= tol:
                return k, alpha
    return None
