import numpy as np
import pytest

from minvset.errors import (
    ConstantLeadingCoefficient,
    NotExactlySolvable,
    ResonantSpectrum,
    SingularRestriction,
    ZeroOperator,
)
from minvset.operator import (
    DiffOperator,
    apply,
    compose,
    detect_scalar_power,
    eigenpolynomial,
    fuchs_index,
    fundamental_polygon,
    is_exactly_solvable,
    is_nondegenerate,
    matrix_on_Cn,
    operator_from_eigenpairs,
    symbol_eigenvalues,
)
from minvset.poly import ComplexPoly

from .operators import CUBIC, EXPANDING, LEGENDRE, LEVY, PARABOLIC

D = DiffOperator.derivative()
REFLECTION = operator_from_eigenpairs([ComplexPoly.monomial(i) for i in range(5)], [1, -1, 1, -1, 1])


def random_es(rng, k):
    return DiffOperator([rng.normal(size=j + 1) + 1j * rng.normal(size=j + 1) for j in range(k + 1)])


def test_fuchs_index_examples():
    assert fuchs_index(D) == -1
    assert fuchs_index(CUBIC) == 0
    assert fuchs_index(LEVY) == 0
    with pytest.raises(ZeroOperator):
        fuchs_index(DiffOperator())


def test_classification_examples():
    assert (is_exactly_solvable(CUBIC), is_nondegenerate(CUBIC)) == (True, True)
    assert not is_exactly_solvable(D)
    T = DiffOperator([[0], [1], [0, 1]])  # x d^2 + d
    assert fuchs_index(T) == -1
    assert not is_exactly_solvable(T)


def test_degenerate_operator():
    T = DiffOperator([[0], [0, 1], [1]])  # d^2 + x d: Fuchs index reached by Q_1 only
    assert is_exactly_solvable(T)
    assert not is_nondegenerate(T)


def test_apply_examples():
    xz = ComplexPoly([-0.7, 1])  # x - z at z = 0.7
    assert apply(PARABOLIC, xz).allclose(ComplexPoly([0.25 - 0.7, 0, 1]))
    assert apply(EXPANDING, ComplexPoly.monomial(2)).allclose(ComplexPoly([1, -2, 1]))
    assert apply(LEVY, ComplexPoly.zero()).is_zero()


def test_symbol_eigenvalues_examples():
    lam = symbol_eigenvalues(EXPANDING, 2).lambdas
    assert np.allclose(lam, [-27 / 32, -15 / 16, 1], atol=1e-15)
    assert np.allclose(symbol_eigenvalues(LEGENDRE, 4).lambdas, [0, 2, 6, 12, 20])
    assert np.allclose(symbol_eigenvalues(DiffOperator([[3j]]), 3).lambdas, [3j] * 4)
    with pytest.raises(NotExactlySolvable):
        symbol_eigenvalues(D, 2)


def test_spectrum_matches_matrix_diagonal():
    rng = np.random.default_rng(21)
    for _ in range(20):
        T = random_es(rng, int(rng.integers(1, 5)))
        n = int(rng.integers(0, 9))
        M = matrix_on_Cn(T, n)
        assert not M.overflow
        assert np.allclose(np.diag(M.entries), symbol_eigenvalues(T, n).lambdas, atol=1e-12)
        assert np.abs(np.tril(M.entries, -1)).max(initial=0) <= 1e-13


def test_eigenpolynomial_examples():
    assert eigenpolynomial(LEGENDRE, 2).allclose(ComplexPoly([-1 / 3, 0, 1]))
    assert eigenpolynomial(LEGENDRE, 1).allclose(ComplexPoly([0, 1]))
    xd = DiffOperator([[0], [0, 1]])
    assert eigenpolynomial(xd, 3).allclose(ComplexPoly.monomial(3))
    with pytest.raises(ResonantSpectrum):
        eigenpolynomial(DiffOperator.identity(), 2)


def test_eigen_residual_random():
    rng = np.random.default_rng(22)
    for _ in range(30):
        T = random_es(rng, int(rng.integers(1, 5)))
        n = int(rng.integers(1, 8))
        try:
            p = eigenpolynomial(T, n)
        except ResonantSpectrum:
            continue
        lam = symbol_eigenvalues(T, n).lambdas[n]
        assert abs(p.lead - 1) < 1e-12
        assert (apply(T, p) - p * lam).norm() <= 1e-10 * max(p.norm(), 1) * max(abs(lam), 1)


def test_compose_examples():
    x = DiffOperator.multiplication(ComplexPoly.x())
    assert compose(D, x).allclose(DiffOperator([[1], [0, 1]]))
    assert abs(symbol_eigenvalues(compose(LEGENDRE, LEGENDRE), 2).lambdas[2] - 36) < 1e-12


def test_compose_coherence():
    rng = np.random.default_rng(23)
    for _ in range(20):
        A = DiffOperator([rng.normal(size=int(rng.integers(1, 4))) for _ in range(int(rng.integers(1, 4)))])
        B = DiffOperator([rng.normal(size=int(rng.integers(1, 4))) * 1j for _ in range(int(rng.integers(1, 4)))])
        p = ComplexPoly(rng.normal(size=7))
        assert apply(compose(A, B), p).allclose(apply(A, apply(B, p)), atol=1e-11 * max(1, p.norm()) * 100)


def test_from_eigenpairs_examples():
    legendre = [ComplexPoly([1]), ComplexPoly([0, 1]), ComplexPoly([-1 / 3, 0, 1])]
    assert operator_from_eigenpairs(legendre, [0, 2, 6]).allclose(LEGENDRE, atol=1e-12)
    mono = [ComplexPoly.monomial(i) for i in range(4)]
    assert operator_from_eigenpairs(mono, [1] * 4).allclose(DiffOperator.identity())
    assert np.allclose(matrix_on_Cn(REFLECTION, 4).entries, np.diag([1, -1, 1, -1, 1]))
    assert operator_from_eigenpairs(mono, [0] * 4).is_zero()


def test_from_eigenpairs_inverts_extraction():
    rng = np.random.default_rng(24)
    done = 0
    while done < 10:
        k = int(rng.integers(1, 5))
        T = random_es(rng, k)
        lam = symbol_eigenvalues(T, k).lambdas
        try:
            polys = [eigenpolynomial(T, j) for j in range(k + 1)]
        except ResonantSpectrum:
            continue
        back = operator_from_eigenpairs(polys, lam)
        assert back.allclose(T, atol=1e-8)
        done += 1


def test_fundamental_polygon_examples():
    tri = fundamental_polygon(CUBIC).vertices
    assert tri.size == 3
    assert np.allclose(np.sort_complex(tri ** 3), [1, 1, 1], atol=1e-12)
    point = fundamental_polygon(PARABOLIC).vertices
    assert point.size == 1 and abs(point[0] - 0.5) < 1e-7
    a = 0.3 - 2j
    assert np.allclose(fundamental_polygon(DiffOperator([[0], [-a, 1]])).vertices, [a])
    with pytest.raises(ConstantLeadingCoefficient):
        fundamental_polygon(D)


def test_matrix_examples():
    M = matrix_on_Cn(D, 2)
    assert np.allclose(M.entries, [[0, 1, 0], [0, 0, 2], [0, 0, 0]])
    assert not M.overflow
    assert matrix_on_Cn(DiffOperator([[0, 0, 1]]), 2).overflow
    E = matrix_on_Cn(EXPANDING, 2).entries
    assert np.allclose(np.diag(E), [-27 / 32, -15 / 16, 1])


def test_scalar_power_examples():
    assert detect_scalar_power(DiffOperator.identity(), 3) == (1, 1)
    k, alpha = detect_scalar_power(REFLECTION, 4)
    assert k == 2 and abs(alpha - 1) < 1e-12
    assert detect_scalar_power(EXPANDING, 2, k_max=12) is None
    with pytest.raises(SingularRestriction):
        detect_scalar_power(D, 2)


def test_spectrum_eventually_grows():
    rng = np.random.default_rng(25)
    for _ in range(10):
        k = int(rng.integers(1, 5))
        T = random_es(rng, k)
        mod = np.abs(symbol_eigenvalues(T, 10 * k + 20).lambdas[10 * k:])
        assert np.all(np.diff(mod) > 0)
