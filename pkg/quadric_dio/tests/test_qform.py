from fractions import Fraction

import numpy as np
import pytest

from quadric_dio.errors import DimensionMismatchError, NotApplicableError, PreconditionError
from quadric_dio.forms.qform import (
    QuadForm,
    RankPair,
    RationalForm,
    Signature,
    bilinear,
    determinant,
    diagonalize,
    evaluate,
    form_norm,
    is_exceptional,
    is_nonsingular,
    real_signature,
)
from quadric_dio.utils.rationals import mat_det


@pytest.mark.parametrize(
    "x, expected",
    [((1, 1, 1, 1), 0), ((1, 2, 3, 4), -2), ((0, 0, 0, 0), 0), ((2, 1, 1, 3), 5)],
)
def test_evaluate_q0(q0, x, expected):
    assert evaluate(q0, x) == expected


def test_evaluate_sphere_on_light_cone(sphere):
    assert evaluate(sphere, (1, 1, 0, 0)) == 0
    assert evaluate(sphere, (3, 1, 2, 2)) == 0


def test_bilinear_gram_entries(q0):
    e = [tuple(int(i == j) for j in range(4)) for i in range(4)]
    assert bilinear(q0, e[0], e[3]) == Fraction(1, 2)
    assert bilinear(q0, e[0], e[1]) == 0
    assert bilinear(q0, e[1], e[2]) == Fraction(-1, 2)


@pytest.mark.parametrize("x", [(1, 2, 3, 4), (-5, 0, 7, 2), (1, 1, 1, 1)])
def test_bilinear_on_diagonal_is_the_form(q0, sphere, x):
    for q in (q0, sphere):
        assert bilinear(q, x, x) == evaluate(q, x)


def test_dimension_mismatch_is_rejected(q0):
    with pytest.raises(DimensionMismatchError):
        evaluate(q0, (1, 2, 3))
    with pytest.raises(DimensionMismatchError):
        bilinear(q0, (1, 2, 3, 4), (1, 2))


def test_nonsingularity():
    assert is_nonsingular(QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, -1)]))
    assert not is_nonsingular(QuadForm.diagonal([1, 0, 0]))
    assert is_nonsingular(QuadForm.diagonal([-1, 1, 1, 1]))


def test_determinant_examples(q0):
    assert determinant(q0) == Fraction(1, 16)
    assert determinant(QuadForm.diagonal([1, 1])) == 1
    assert determinant(QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, -2)])) == Fraction(4, 16)


def test_determinant_scales_with_square_of_change_of_basis(q0):
    m = ((2, 0, 0, 0), (0, 1, 0, 0), (1, 0, 1, 0), (0, 3, 0, 1))
    composed = q0.as_rational().compose(tuple(tuple(Fraction(x) for x in row) for row in m))
    assert mat_det(m) == 2
    assert mat_det(composed.matrix) == 4 * determinant(q0)


@pytest.mark.parametrize(
    "name, expected",
    [
        ("q0", Signature(2, 2, 0)),
        ("sphere", Signature(3, 1, 0)),
        ("q5", Signature(3, 2, 0)),
        ("conic", Signature(1, 2, 0)),
    ],
)
def test_real_signature(name, expected, request):
    q = request.getfixturevalue(name)
    assert real_signature(q) == expected
    assert q.signature == expected


def test_signature_of_degenerate_form():
    assert real_signature(QuadForm.diagonal([1, 0, 0])) == Signature(1, 0, 2)
    assert Signature(1, 0, 2).p_r == 0
    assert not Signature(1, 0, 2).indefinite


def test_diagonalize_handles_zero_diagonal(q0):
    diagonal = diagonalize(q0)
    assert len(diagonal) == 4
    assert sum(1 for x in diagonal if x > 0) == 2
    assert sum(1 for x in diagonal if x < 0) == 2


def test_form_norm():
    assert form_norm(QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, -1)])) == Fraction(1, 2)
    assert form_norm(QuadForm.diagonal([1, 1, 1])) == 1
    assert form_norm(RationalForm(((0, 0), (0, 0)))) == 0


def test_is_exceptional(q0, sphere):
    assert is_exceptional(q0)
    assert not is_exceptional(sphere)
    assert is_exceptional(QuadForm.from_polynomial(4, [(0, 3, 1), (1, 2, -2)]))


def test_is_exceptional_needs_a_nonsingular_quaternary_form(conic):
    with pytest.raises(NotApplicableError):
        is_exceptional(conic)
    with pytest.raises(NotApplicableError):
        is_exceptional(QuadForm.diagonal([1, 1, 0, -1]))
    with pytest.raises(NotApplicableError):
        is_exceptional(QuadForm.diagonal([1, 1, 1, 1]))


def test_gram_validation():
    with pytest.raises(PreconditionError):
        QuadForm(((1, 0), (0, 2)))
    with pytest.raises(PreconditionError):
        QuadForm(((0, 1), (2, 0)))
    with pytest.raises(PreconditionError):
        QuadForm.from_polynomial(3, [(2, 1, 1)])


def test_upper_and_polynomial_agree(q5):
    assert q5.upper() == [(0, 4, 1), (1, 1, 1), (2, 2, 1), (3, 3, -3)]
    assert QuadForm.from_polynomial(q5.dim, q5.upper()) == q5


def test_to_integral_clears_denominators():
    form = RationalForm(((Fraction(1, 2), 0), (0, Fraction(-3, 4))))
    q, scale = form.to_integral()
    assert q.gram2 == ((4, 0), (0, -6))
    assert scale == 4


def test_rank_pair_invariants():
    RankPair(2, 2).check(4)
    RankPair(0, 1).check(3)
    with pytest.raises(AssertionError):
        RankPair(2, 1).check(4)


def _random_unimodular(rng, n):
    u = np.eye(n, dtype=np.int64)
    for _ in range(2 * n):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        u[:, i] += int(rng.integers(-2, 3)) * u[:, j]
    return u[:, rng.permutation(n)] * rng.choice([-1, 1], size=n)


def test_signature_is_invariant_under_unimodular_change_of_basis():
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        q = QuadForm.from_polynomial(n, [(i, j, int(rng.integers(-3, 4))) for i in range(n) for j in range(i, n)])
        gram = np.array(q.gram2, dtype=np.int64)
        u = _random_unimodular(rng, n)
        moved = QuadForm(tuple(tuple(int(x) for x in row) for row in u.T @ gram @ u))
        signature = real_signature(q)
        assert real_signature(moved) == signature, q.upper()
        assert signature.pos + signature.neg + signature.zero == n
        if is_nonsingular(q):
            eig = np.linalg.eigvalsh(gram.astype(np.float64))
            assert (signature.pos, signature.neg) == (int((eig > 0).sum()), int((eig < 0).sum()))
