"""Univariate complex polynomials and their roots."""

from __future__ import annotations

import math
from numbers import Number
from typing import Iterable, NamedTuple

import numpy as np

from ._kernels import EPS, roots_batch
from .errors import DomainError, NonConvergence, ZeroLeading, ZeroPolynomial

#: trailing coefficients below this fraction of the largest modulus are dropped
TRIM_RTOL = 1e-13


def _as_coeff_array(coeffs) -> np.ndarray:
    if isinstance(coeffs, ComplexPoly):
        return coeffs.coeffs.copy()
    arr = np.array(coeffs, dtype=complex).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError("polynomial coefficients must be finite")
    return arr


def trim(coeffs: np.ndarray, rtol: float = TRIM_RTOL) -> np.ndarray:
    """Drop trailing coefficients whose modulus is below ``rtol`` times the largest."""
    if coeffs.size == 0:
        return coeffs
    mag = np.abs(coeffs)
    top = mag.max()
    if top == 0.0:
        return coeffs[:0]
    keep = np.flatnonzero(mag >= rtol * top)
    return coeffs[: keep[-1] + 1]


class ComplexPoly:
    """Polynomial with complex coefficients, ``coeffs[i]`` multiplies ``x**i``.

    Values are immutable; the coefficient array is read-only and normalised so
    that its last entry is nonzero (or it is empty for the zero polynomial).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = (), trim_rtol: float = TRIM_RTOL):
        arr = trim(_as_coeff_array(coeffs), trim_rtol)
        arr.setflags(write=False)
        self.coeffs = arr

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls) -> "ComplexPoly":
        return cls(())

    @classmethod
    def const(cls, c) -> "ComplexPoly":
        return cls((c,))

    @classmethod
    def x(cls) -> "ComplexPoly":
        return cls((0.0, 1.0))

    @classmethod
    def monomial(cls, k: int, c=1.0) -> "ComplexPoly":
        arr = np.zeros(k + 1, dtype=complex)
        arr[k] = c
        return cls(arr)

    @classmethod
    def linear(cls, root) -> "ComplexPoly":
        """``x - root``."""
        return cls((-complex(root), 1.0))

    # basic queries ----------------------------------------------------------
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1]) if self.coeffs.size else 0j

    def coeff(self, i: int) -> complex:
        return complex(self.coeffs[i]) if 0 <= i < self.coeffs.size else 0j

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.coeffs.size), dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out

    def monic(self) -> "ComplexPoly":
        if self.is_zero():
            raise ZeroPolynomial("the zero polynomial has no monic multiple")
        return ComplexPoly(self.coeffs / self.coeffs[-1])

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = _coerce(other)
        n = max(self.coeffs.size, other.coeffs.size)
        return bool(np.all(np.abs(self.padded(n) - other.padded(n)) <= atol))

    # evaluation and calculus -------------------------------------------------
    def __call__(self, x):
        return poly_eval(self, x)

    def derive(self, order: int = 1) -> "ComplexPoly":
        return poly_derive(self, order)

    def roots(self, tol: float = 1e-12) -> "RootSet":
        return poly_roots(self, tol)

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        n = max(self.coeffs.size, other.coeffs.size)
        return ComplexPoly(self.padded(n) + other.padded(n))

    __radd__ = __add__

    def __neg__(self):
        return ComplexPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Number):
            return ComplexPoly(self.coeffs * complex(other))
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return ComplexPoly.zero()
        return ComplexPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return ComplexPoly(self.coeffs / complex(scalar))

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative powers are not polynomials")
        out = ComplexPoly.const(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (ComplexPoly, Number)):
            other = _coerce(other)
            return np.array_equal(self.coeffs, other.coeffs)
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"ComplexPoly({[complex(c) for c in self.coeffs]!r})"


def _coerce(value) -> ComplexPoly:
    if isinstance(value, ComplexPoly):
        return value
    if isinstance(value, Number):
        return ComplexPoly.const(value)
    return ComplexPoly(value)


def poly_eval(p: ComplexPoly, x):
    """Horner evaluation at a scalar or an array of points."""
    c = p.coeffs
    scalar = np.isscalar(x)
    xs = np.asarray(x, dtype=complex)
    if scalar and not np.isfinite(xs):
        raise DomainError("evaluation point must be finite")
    if c.size == 0:
        out = np.zeros_like(xs)
    else:
        out = np.full_like(xs, c[-1])
        for a in c[-2::-1]:
            out = out * xs + a
    return complex(out) if scalar else out


def poly_derive(p: ComplexPoly, order: int = 1) -> ComplexPoly:
    """``order``-fold derivative; zero once ``order`` exceeds the degree."""
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    c = p.coeffs
    if order == 0:
        return p
    if order > c.size - 1:
        return ComplexPoly.zero()
    i = np.arange(order, c.size)
    factor = np.array([falling_factorial(int(k), order) for k in i], dtype=float)
    return ComplexPoly(c[order:] * factor)


def poly_from_roots(roots, leading=1.0) -> ComplexPoly:
    """``leading * prod(x - r)``."""
    leading = complex(leading)
    if leading == 0:
        raise ZeroLeading("leading coefficient must be nonzero")
    out = np.array([leading])
    for r in np.asarray(roots, dtype=complex).ravel():
        out = np.convolve(out, np.array([-r, 1.0]))
    return ComplexPoly(out)


def falling_factorial(n: int, m: int) -> int:
    """``n (n-1) ... (n-m+1)`` as an exact integer."""
    if m < 0 or n < 0 or m > n:
        raise DomainError(f"falling factorial needs 0 <= m <= n, got n={n}, m={m}")
    return math.perm(n, m)


def sort_complex(z: np.ndarray) -> np.ndarray:
    """Lexicographic order by (re, im)."""
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


class RootSet(NamedTuple):
    roots: np.ndarray  # with multiplicity, sorted by (re, im)
    residual: float  # max |p(r)| / |lead|

    def __len__(self) -> int:
        return self.roots.size

    def distinct(self, radius: float = 0.0) -> list[tuple[complex, int]]:
        """Roots grouped into (value, multiplicity) pairs."""
        return [(complex(c), k) for c, k in cluster_roots(self.roots, radius)]


def cluster_roots(z: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    """Single-linkage clusters of ``z`` at ``radius``; each as (mean, size)."""
    z = np.asarray(z, dtype=complex)
    n = z.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if radius > 0:
        for i in range(n):
            close = np.flatnonzero(np.abs(z[i + 1 :] - z[i]) < radius) + i + 1
            for j in close:
                ri, rj = find(i), find(int(j))
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = [(complex(z[idx].mean()), len(idx)) for idx in groups.values()]
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def _error_bound(c: np.ndarray, r: np.ndarray) -> np.ndarray:
    mag = np.abs(c)
    ar = np.abs(r)
    acc = np.full(r.shape, mag[-1])
    for a in mag[-2::-1]:
        acc = acc * ar + a
    return acc


def poly_roots(p: ComplexPoly, tol: float = 1e-12) -> RootSet:
    """All roots of ``p`` with multiplicity.

    Aberth iteration (closed forms for degree <= 2), companion-matrix fallback,
    then roots closer than ``sqrt(tol)`` are merged to their mean.
    """
    if p.is_zero():
        raise ZeroPolynomial("the zero polynomial has no finite root set")
    c = p.coeffs
    d = c.size - 1
    if d == 0:
        return RootSet(np.empty(0, dtype=complex), 0.0)
    batch = roots_batch(c[None, :], rtol=0.0)
    raw = batch.roots[0, :d]
    merged = []
    for centre, size in cluster_roots(raw, math.sqrt(tol)):
        merged.extend([centre] * size)
    lead = abs(c[-1])

    def check(r):
        res = np.abs(poly_eval(p, r))
        allowed = np.maximum(
            tol * (1.0 + lead) * np.maximum(1.0, np.abs(r)) ** d,
            64 * EPS * _error_bound(c, r),
        )
        return res, bool(np.all(np.isfinite(r)) and np.all(res <= allowed))

    r = np.array(merged, dtype=complex)
    res, good = check(r)
    if not good:
        # two close but distinct roots: the cluster mean may be worse than either
        r = raw
        res, good = check(r)
    if not good:
        raise NonConvergence(
            f"root residual {np.nanmax(res):.3e} above bound",
            best=sort_complex(r),
            residual=float(np.nanmax(res) / lead),
        )
    return RootSet(sort_complex(r), float(res.max() / lead))
