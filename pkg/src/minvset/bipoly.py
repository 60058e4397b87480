"""Bivariate complex polynomials ``sum c[i, j] x^i z^j``."""

from __future__ import annotations

from numbers import Number

import numpy as np

from .errors import DomainError
from .poly import TRIM_RTOL, ComplexPoly


def _trim_matrix(c: np.ndarray, rtol: float) -> np.ndarray:
    if c.size == 0:
        return np.zeros((0, 0), dtype=complex)
    mag = np.abs(c)
    top = mag.max()
    if top == 0.0:
        return np.zeros((0, 0), dtype=complex)
    live = mag >= rtol * top
    rows = np.flatnonzero(live.any(axis=1))
    cols = np.flatnonzero(live.any(axis=0))
    out = c[: rows[-1] + 1, : cols[-1] + 1].copy()
    return out


class BiPoly:
    """Immutable coefficient matrix, ``coeffs[i, j]`` multiplies ``x^i z^j``.

    Trailing rows and columns whose entries are all below ``TRIM_RTOL`` times the
    largest modulus are removed; the zero polynomial has shape ``(0, 0)``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=((),), trim_rtol: float = TRIM_RTOL):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None] if arr.size else np.zeros((0, 0), dtype=complex)
        if arr.ndim != 2:
            raise DomainError("bivariate coefficients must form a matrix")
        if not np.all(np.isfinite(arr)):
            raise DomainError("bivariate coefficients must be finite")
        arr = _trim_matrix(arr, trim_rtol)
        arr.setflags(write=False)
        self.coeffs = arr

    @classmethod
    def from_x(cls, p: ComplexPoly) -> "BiPoly":
        return cls(p.coeffs[:, None] if p.coeffs.size else np.zeros((0, 0)))

    @classmethod
    def from_z(cls, p: ComplexPoly) -> "BiPoly":
        return cls(p.coeffs[None, :] if p.coeffs.size else np.zeros((0, 0)))

    @classmethod
    def x_minus_z_power(cls, n: int) -> "BiPoly":
        """``(x - z)^n``."""
        from math import comb

        c = np.zeros((n + 1, n + 1), dtype=complex)
        for i in range(n + 1):
            c[i, n - i] = comb(n, i) * (-1) ** (n - i)
        return cls(c)

    # queries ------------------------------------------------------------------
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def deg_x(self) -> int:
        return self.coeffs.shape[0] - 1

    def deg_z(self) -> int:
        return self.coeffs.shape[1] - 1

    def total_degree(self) -> int:
        if self.is_zero():
            return -1
        mag = np.abs(self.coeffs)
        i, j = np.nonzero(mag >= TRIM_RTOL * mag.max())
        return int((i + j).max())

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0

    def padded(self, rows: int, cols: int) -> np.ndarray:
        r, c = self.coeffs.shape
        out = np.zeros((max(rows, r), max(cols, c)), dtype=complex)
        out[:r, :c] = self.coeffs
        return out

    def allclose(self, other: "BiPoly", atol: float = 1e-12) -> bool:
        r = max(self.coeffs.shape[0], other.coeffs.shape[0])
        c = max(self.coeffs.shape[1], other.coeffs.shape[1])
        return bool(np.all(np.abs(self.padded(r, c) - other.padded(r, c)) <= atol))

    def row(self, i: int) -> ComplexPoly:
        """Coefficient of ``x^i`` as a polynomial in ``z``."""
        if 0 <= i < self.coeffs.shape[0]:
            return ComplexPoly(self.coeffs[i])
        return ComplexPoly.zero()

    def col(self, j: int) -> ComplexPoly:
        """Coefficient of ``z^j`` as a polynomial in ``x``."""
        if 0 <= j < self.coeffs.shape[1]:
            return ComplexPoly(self.coeffs[:, j])
        return ComplexPoly.zero()

    # evaluation ---------------------------------------------------------------
    def __call__(self, x, z):
        scalar = np.isscalar(x) and np.isscalar(z)
        xb, zb = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(z, dtype=complex))
        S = self.slice_matrix(zb.ravel())
        xr = xb.ravel()
        out = np.zeros(xr.size, dtype=complex)
        for i in range(S.shape[1] - 1, -1, -1):
            out = out * xr + S[:, i]
        return complex(out[0]) if scalar else out.reshape(xb.shape)

    def slice_matrix(self, zs) -> np.ndarray:
        """Row ``m`` holds the x-coefficients of ``B(x, zs[m])`` (untrimmed)."""
        zs = np.asarray(zs, dtype=complex).ravel()
        c = self.coeffs
        if c.size == 0:
            return np.zeros((zs.size, 0), dtype=complex)
        out = np.empty((zs.size, c.shape[0]), dtype=complex)
        out[:] = c[:, -1]
        col = zs[:, None]
        for j in range(c.shape[1] - 2, -1, -1):
            out *= col
            out += c[:, j]
        return out

    def slice_x(self, z0) -> ComplexPoly:
        return bipoly_slice_x(self, z0)

    def slice_z(self, x0) -> ComplexPoly:
        """``B(x0, z)`` as a polynomial in ``z``."""
        return self.transpose().slice_x(x0)

    def dx(self) -> "BiPoly":
        c = self.coeffs
        if c.shape[0] <= 1:
            return BiPoly()
        return BiPoly(np.arange(1, c.shape[0])[:, None] * c[1:])

    def dz(self) -> "BiPoly":
        c = self.coeffs
        if c.shape[1] <= 1:
            return BiPoly()
        return BiPoly(np.arange(1, c.shape[1])[None, :] * c[:, 1:])

    def transpose(self) -> "BiPoly":
        return BiPoly(self.coeffs.T)

    def diagonal(self) -> ComplexPoly:
        """``B(z, z)``."""
        c = self.coeffs
        if c.size == 0:
            return ComplexPoly.zero()
        out = np.zeros(c.shape[0] + c.shape[1] - 1, dtype=complex)
        for i in range(c.shape[0]):
            out[i : i + c.shape[1]] += c[i]
        return ComplexPoly(out)

    def divide_x_minus_z(self) -> tuple["BiPoly", ComplexPoly]:
        """Synthetic division by ``x - z`` in ``C[z][x]``.

        Returns ``(Q, r)`` with ``B = (x - z) Q + r(z)``; the remainder is the
        diagonal ``B(z, z)``.
        """
        c = self.coeffs
        if c.size == 0:
            return BiPoly(), ComplexPoly.zero()
        dx, w = c.shape[0] - 1, c.shape[1]
        # row i of the quotient has z-degree at most (deg_z + dx - 1 - i)
        width = w + dx
        rows = np.zeros((dx + 1, width), dtype=complex)
        rows[:, :w] = c
        q = np.zeros((max(dx, 0), width), dtype=complex)
        carry = np.zeros(width, dtype=complex)
        for i in range(dx, 0, -1):
            # q_{i-1} = b_i + z * q_i
            shifted = np.zeros(width, dtype=complex)
            shifted[1:] = carry[:-1]
            carry = rows[i] + shifted
            q[i - 1] = carry
        shifted = np.zeros(width, dtype=complex)
        shifted[1:] = carry[:-1]
        rem = rows[0] + shifted
        return BiPoly(q) if dx > 0 else BiPoly(), ComplexPoly(rem)

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        r = max(self.coeffs.shape[0], other.coeffs.shape[0])
        c = max(self.coeffs.shape[1], other.coeffs.shape[1])
        return BiPoly(self.padded(r, c) + other.padded(r, c))

    __radd__ = __add__

    def __neg__(self):
        return BiPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Number):
            return BiPoly(self.coeffs * complex(other))
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return BiPoly()
        a, b = self.coeffs, other.coeffs
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j] != 0:
                    out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
        return BiPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return BiPoly(self.coeffs / complex(scalar))

    def __pow__(self, k: int):
        out = BiPoly([[1.0]])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, BiPoly):
            return np.array_equal(self.coeffs, other.coeffs)
        return NotImplemented

    def __hash__(self):
        return hash((self.coeffs.shape, self.coeffs.tobytes()))

    def __repr__(self):
        return f"BiPoly({self.coeffs.tolist()!r})"


def _coerce(value) -> BiPoly:
    if isinstance(value, BiPoly):
        return value
    if isinstance(value, Number):
        return BiPoly([[value]])
    if isinstance(value, ComplexPoly):
        return BiPoly.from_x(value)
    return BiPoly(value)


def bipoly_slice_x(B: BiPoly, z0) -> ComplexPoly:
    """``B(x, z0)`` as a polynomial in ``x``; may be the zero polynomial."""
    z0 = complex(z0)
    if not np.isfinite(z0):
        raise DomainError("slice point must be finite")
    if B.is_zero():
        return ComplexPoly.zero()
    return ComplexPoly(B.slice_matrix([z0])[0])
