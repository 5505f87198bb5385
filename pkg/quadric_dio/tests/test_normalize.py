from fractions import Fraction

import numpy as np
import pytest

from quadric_dio.errors import NotIsotropicError, NotNormalizedError, PreconditionError, SingularFormError
from quadric_dio.forms.normalize import (
    IsoSubspace,
    block_extension,
    check_isotropic_subspace,
    flow_matrix,
    hyperbolic_coefficient,
    is_m_normalized,
    m_normalize,
    remainder_of,
)
from quadric_dio.forms.qform import QuadForm, RationalForm, Signature, real_signature
from quadric_dio.utils.rationals import identity, mat_det, mat_inverse, mat_vec


def _unit(i, n):
    return tuple(int(i == j) for j in range(n))


def _inside_leading_block(normalization, vector):
    image = mat_vec(mat_inverse(normalization.M), vector)
    return all(x == 0 for x in image[normalization.m :])


def test_conic_is_already_normalized(conic):
    result = m_normalize(conic, IsoSubspace(((1, 0, 0),)))
    assert result.M == identity(3)
    assert result.m == 1
    assert remainder_of(result).matrix == ((Fraction(-1),),)


def test_sphere_remainder_is_definite(sphere):
    result = m_normalize(sphere, IsoSubspace(((1, 1, 0, 0),)))
    assert is_m_normalized(result.R, 1)
    assert real_signature(remainder_of(result)) == Signature(2, 0, 0)
    assert _inside_leading_block(result, (1, 1, 0, 0))


def test_q0_along_a_plane(q0):
    result = m_normalize(q0, IsoSubspace(((1, 0, 0, 0), (0, 1, 0, 0))))
    columns = tuple(zip(*result.M))
    assert columns == ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, -1, 0), (0, 0, 0, 1))
    expected = QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, 1)]).as_rational()
    assert result.R == expected
    assert remainder_of(result).dim == 0


def _random_unimodular(rng, n):
    rows = [list(row) for row in identity(n)]
    for _ in range(6):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        c = int(rng.integers(-2, 3))
        rows[i] = [a + c * b for a, b in zip(rows[i], rows[j])]
    return tuple(tuple(row) for row in rows)


@pytest.mark.parametrize("m", [1, 2])
def test_random_equivalent_forms_are_normalized(q0, m):
    rng = np.random.default_rng(7 + m)
    base = q0.as_rational()
    for _ in range(100):
        u = _random_unimodular(rng, 4)
        composed = base.compose(u)
        q = QuadForm(tuple(tuple(int(2 * x) for x in row) for row in composed.matrix))
        inverse = mat_inverse(u)
        basis = tuple(tuple(int(x) for x in mat_vec(inverse, _unit(i, 4))) for i in range(m))
        result = m_normalize(q, IsoSubspace(basis))
        assert is_m_normalized(result.R, m)
        assert q.as_rational().compose(result.M) == result.R
        for v in basis:
            assert _inside_leading_block(result, v)


def test_subspace_checks(q0):
    with pytest.raises(NotIsotropicError):
        check_isotropic_subspace(q0, IsoSubspace(((1, 0, 0, 1),)))
    with pytest.raises(NotIsotropicError):
        check_isotropic_subspace(q0, IsoSubspace(((1, 0, 0, 0), (2, 0, 0, 0))))
    with pytest.raises(NotIsotropicError):
        check_isotropic_subspace(q0, IsoSubspace(((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))))
    with pytest.raises(NotIsotropicError):
        check_isotropic_subspace(q0, IsoSubspace(((1, 0, 0),)))
    check_isotropic_subspace(q0, IsoSubspace(()))


def test_singular_form_cannot_be_normalized():
    with pytest.raises(SingularFormError):
        m_normalize(QuadForm.diagonal([0, 0, 2]), IsoSubspace(((1, 0, 0),)))


def test_hyperbolic_coefficient(conic, sphere):
    assert hyperbolic_coefficient(conic) == 1
    assert hyperbolic_coefficient(QuadForm.from_polynomial(3, [(0, 2, 3), (1, 1, 1)])) == 3
    with pytest.raises(NotNormalizedError):
        hyperbolic_coefficient(sphere)
    with pytest.raises(NotNormalizedError):
        hyperbolic_coefficient(QuadForm.from_polynomial(3, [(0, 2, 1), (0, 1, 1), (1, 1, 1)]))


def test_block_extension_preserves_normalized_forms(conic):
    plane = QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, 1)]).as_rational()
    g = block_extension(((1, 2), (0, 1)), 2, 3)
    assert plane.compose(g) == plane
    g = block_extension(((Fraction(3),),), 1, 2)
    assert g == ((3, 0, 0), (0, 1, 0), (0, 0, Fraction(1, 3)))
    assert conic.as_rational().compose(g) == conic.as_rational()

    five = RationalForm(
        (
            (0, 0, 0, 0, Fraction(1, 2)),
            (0, 1, 0, 0, 0),
            (0, 0, 1, 0, 0),
            (0, 0, 0, -3, 0),
            (Fraction(1, 2), 0, 0, 0, 0),
        )
    )
    assert five.compose(block_extension(((Fraction(-5, 2),),), 1, 4)) == five


def test_block_extension_rejects_bad_blocks():
    with pytest.raises(PreconditionError):
        block_extension(((1, 2), (2, 4)), 2, 3)
    with pytest.raises(PreconditionError):
        block_extension(((1, 0), (0, 1)), 2, 2)
    with pytest.raises(PreconditionError):
        block_extension(((1,),), 2, 3)


def test_flow_matrix(conic):
    assert flow_matrix(2, 1, 2) == ((Fraction(1, 2), 0, 0), (0, 1, 0), (0, 0, 2))
    assert conic.as_rational().compose(flow_matrix(Fraction(7, 3), 1, 2)) == conic.as_rational()
    g = flow_matrix([2, 3], 2, 3)
    assert [g[i][i] for i in range(4)] == [Fraction(1, 2), Fraction(1, 3), 3, 2]
    with pytest.raises(PreconditionError):
        flow_matrix(0, 1, 2)
    with pytest.raises(PreconditionError):
        flow_matrix([1, 2, 3], 2, 3)


def _random_normalized(rng, m, d):
    n = d + 1
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(m):
        rows[i][d - i] = rows[d - i][i] = Fraction(1, 2)
    for i in range(m, n - m):
        for j in range(i, n - m):
            value = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 3)))
            rows[i][j] = rows[j][i] = value
    return RationalForm(tuple(tuple(row) for row in rows))


def test_block_extension_is_orthogonal_for_random_blocks():
    rng = np.random.default_rng(100)
    for _ in range(100):
        m = int(rng.integers(1, 3))
        d = int(rng.integers(2 * m - 1, 6))
        block = [[Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))) for _ in range(m)] for _ in range(m)]
        if mat_det(block) == 0:
            block = [[Fraction(int(i == j)) + (block[i][j] if i < j else 0) for j in range(m)] for i in range(m)]
        form = _random_normalized(rng, m, d)
        assert is_m_normalized(form, m)
        assert form.compose(block_extension(block, m, d)) == form
