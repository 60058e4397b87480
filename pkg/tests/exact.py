"""Exact arithmetic over Q(i) for identity tests.

``G`` is a Gaussian rational; polynomials are dicts from exponent tuples to
``G`` so that one type serves both one and two variables.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial, perm


class G:
    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(v) -> "G":
        return v if isinstance(v, G) else G(v)

    def __add__(self, o):
        o = G.of(o)
        return G(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return G(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-G.of(o))

    def __rsub__(self, o):
        return G.of(o) - self

    def __mul__(self, o):
        o = G.of(o)
        return G(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = G.of(o)
        d = o.re * o.re + o.im * o.im
        return G((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __eq__(self, o):
        o = G.of(o)
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re or self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"G({self.re}, {self.im})"


I = G(0, 1)


def clean(p: dict) -> dict:
    return {k: v for k, v in p.items() if v}


def add(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, G()) + v
    return clean(out)


def scale(p: dict, c) -> dict:
    return clean({k: v * c for k, v in p.items()})


def mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, u in p.items():
        for b, v in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, G()) + u * v
    return clean(out)


def power(p: dict, k: int, nvars: int) -> dict:
    out = {(0,) * nvars: G(1)}
    for _ in range(k):
        out = mul(out, p)
    return out


# univariate helpers: keys are (i,) for x^i ------------------------------------


def upoly(coeffs) -> dict:
    return clean({(i,): G.of(c) for i, c in enumerate(coeffs)})


def uderive(p: dict, order: int = 1) -> dict:
    return clean({(i - order,): c * perm(i, order) for (i,), c in p.items() if i >= order})


def udegree(p: dict) -> int:
    return max((i for (i,) in p), default=-1)


def in_x(p: dict) -> dict:
    """Univariate in ``x`` -> bivariate ``(i, 0)``."""
    return {(i, 0): c for (i,), c in p.items()}


def in_z(p: dict) -> dict:
    """Univariate -> bivariate in ``z``, key ``(0, j)``."""
    return {(0, j): c for (j,), c in p.items()}


X_MINUS_Z = {(1, 0): G(1), (0, 1): G(-1)}


def apply_to_power(op: list, k: int) -> dict:
    """``T[(x - z)^k]`` for ``T = sum_j op[j] d^j``, exactly."""
    out: dict = {}
    for j, q in enumerate(op):
        if j > k or not q:
            continue
        term = mul(in_x(q), power(X_MINUS_Z, k - j, 2))
        out = add(out, scale(term, perm(k, j)))
    return out


def op_add(a: list, b: list) -> list:
    n = max(len(a), len(b))
    a = a + [{}] * (n - len(a))
    b = b + [{}] * (n - len(b))
    return [add(p, q) for p, q in zip(a, b)]


def op_scale(a: list, c) -> list:
    return [scale(p, c) for p in a]


def monomial_op(q: dict, j: int) -> list:
    """``q(x) d^j``."""
    return [{}] * j + [q]


# the six closed forms ----------------------------------------------------------


def rhs_i(Q: dict, k: int, m: int) -> list:
    return monomial_op(Q, m)


def rhs_ii(Q: dict, k: int) -> list:
    return op_scale(monomial_op(Q, k), G(Fraction(1, factorial(k))))


def rhs_iii(Q: dict, k: int, ell: int) -> list:
    op: list = []
    for j in range(ell + 1):
        coef = G(Fraction((-1) ** j * perm(ell, j), factorial(k)))
        xpow = {(ell - j,): G(1)}
        op = op_add(op, op_scale(monomial_op(mul(Q, xpow), k - j), coef))
    return op


def rhs_iv(Q: dict, k: int) -> list:
    op: list = []
    for j in range(k + 1):
        coef = G(Fraction((-1) ** j, factorial(k)))
        op = op_add(op, op_scale(monomial_op(uderive(Q, j), k - j), coef))
    return op


def rhs_v(Q: dict, k: int, ell: int) -> list:
    xpow = {(ell,): G(1)}
    return [mul(xpow, q) for q in rhs_iv(Q, k)]


def rhs_vi(Q: dict, k: int, m: int) -> list:
    op: list = []
    for j in range(m + 1):
        coef = G(Fraction((-1) ** (m - j) * comb(k - j, k - m), perm(k, m)))
        op = op_add(op, op_scale(monomial_op(uderive(Q, m - j), j), coef))
    return op


def lhs_i(Q: dict, k: int, m: int) -> dict:
    return scale(mul(in_x(Q), power(X_MINUS_Z, k - m, 2)), perm(k, m))


def lhs_ii(Q: dict, k: int) -> dict:
    return in_x(Q)


def lhs_iii(Q: dict, k: int, ell: int) -> dict:
    return mul(in_x(Q), {(0, ell): G(1)})


def lhs_iv(Q: dict, k: int) -> dict:
    return in_z(Q)


def lhs_v(Q: dict, k: int, ell: int) -> dict:
    return mul(in_z(Q), {(ell, 0): G(1)})


def lhs_vi(Q: dict, k: int, m: int) -> dict:
    return mul(in_z(Q), power(X_MINUS_Z, k - m, 2))
