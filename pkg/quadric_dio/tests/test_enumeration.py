import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from quadric_dio.errors import NotNormalizedError, PreconditionError, SingularFormError
from quadric_dio.forms.qform import QuadForm, evaluate, is_nonsingular
from quadric_dio.points.embeddings import segre, veronese
from quadric_dio.points.enumeration import (
    ProjPoint,
    canonical_key,
    count_by_pairs,
    count_points,
    enumerate_array,
    enumerate_points,
    isolated_pair,
    primitive_p1_points,
)
from quadric_dio.utils.rationals import MP, matrix_rank


def _coords(points):
    return [p.coords for p in points]


def _segre_count(bound):
    exact = [0, 4] + [4 * int(sympy.totient(h)) for h in range(2, bound + 1)]
    cumulative = list(itertools.accumulate(exact))
    return sum(exact[h] * cumulative[bound // h] for h in range(1, bound + 1))


def _sphere_count(bound):
    total = Fraction(0)
    for h in range(1, bound + 1, 2):
        value = Fraction(6 * h)
        for p in sympy.primefactors(h):
            value *= 1 - Fraction(1 if p % 4 == 1 else -1, p)
        total += value
    return int(total)


def _random_one_normalized(rng, dim):
    while True:
        k = int(rng.integers(1, 4)) * int(rng.choice([-1, 1]))
        middle = [(i, j, int(rng.integers(-3, 4))) for i in range(1, dim - 1) for j in range(i, dim - 1)]
        q = QuadForm.from_polynomial(dim, [(0, dim - 1, k)] + middle)
        if is_nonsingular(q):
            return q


def test_conic_points_of_height_one(conic):
    assert _coords(enumerate_points(conic, 1)) == [(1, 1, 1), (1, 0, 0), (1, -1, 1), (0, 0, 1)]
    assert len(enumerate_points(conic, 4)) == 8


def test_anisotropic_form_has_no_points(anisotropic3):
    assert enumerate_points(anisotropic3, 30) == []
    assert enumerate_array(anisotropic3, 30).shape == (0, 3)


@pytest.mark.parametrize("name, bound", [("conic", 64), ("sphere_normalized", 16)])
def test_box_and_divisor_strategies_agree(name, bound, request):
    q = request.getfixturevalue(name)
    box = enumerate_array(q, bound, strategy="box")
    divisor = enumerate_array(q, bound, strategy="divisor")
    assert np.array_equal(box, divisor)
    assert len(box) > 0


def test_points_are_primitive_on_the_quadric_and_ordered(conic, sphere):
    for q, bound in ((conic, 64), (sphere, 12)):
        points = _coords(enumerate_points(q, bound))
        assert points == sorted(points, key=canonical_key)
        assert len(set(points)) == len(points)
        for x in points:
            assert evaluate(q, x) == 0
            assert math.gcd(*x) == 1
            assert max(abs(c) for c in x) <= bound
            assert next(c for c in x if c) > 0


def test_q0_points_are_the_segre_image(q0):
    bound = 32
    lines = [ProjPoint(p) for p in primitive_p1_points(bound)]
    expected = set()
    for a in lines:
        for b in lines:
            if a.height * b.height > bound:
                break
            expected.add(segre(a, b).coords)
    assert set(_coords(enumerate_points(q0, bound))) == expected


def test_enumeration_is_independent_of_threads(sphere):
    single = enumerate_array(sphere, 24, threads=1, slice_rows=3)
    pooled = enumerate_array(sphere, 24, threads=4, slice_rows=3)
    assert np.array_equal(single, pooled)


def test_q0_counts_grow_faster_than_t_squared(q0):
    rows = count_points(q0, [8, 16, 32, 64])
    assert [row.N for row in rows[:2]] == [832, 3712]
    ratios = [row.ratio_k for row in rows]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert all(row.ratio_log is not None for row in rows)


def test_sphere_counts_stay_in_a_band(sphere):
    rows = count_points(sphere, [8, 16, 32])
    assert [row.N for row in rows[:2]] == [102, 414]
    ratios = [row.ratio_k for row in rows]
    assert max(ratios) / min(ratios) <= 3


def test_count_points_without_grid(conic):
    assert count_points(conic, []) == []


def test_primitive_p1_points():
    assert primitive_p1_points(1) == [(1, 1), (1, 0), (1, -1), (0, 1)]
    assert len(primitive_p1_points(2)) == 8


def test_proj_point_rejects_non_primitive_vectors():
    with pytest.raises(PreconditionError):
        ProjPoint((2, 4))
    with pytest.raises(PreconditionError):
        ProjPoint((-1, 3))
    assert ProjPoint.from_vector((-2, 4)).coords == (1, -2)


def test_enumeration_errors(conic, sphere):
    with pytest.raises(PreconditionError):
        enumerate_points(conic, 0)
    with pytest.raises(SingularFormError):
        enumerate_points(QuadForm.diagonal([1, 0, -1]), 4)
    with pytest.raises(PreconditionError):
        enumerate_points(conic, 4, strategy="sieve")
    with pytest.raises(NotNormalizedError):
        enumerate_points(sphere, 4, strategy="divisor")


def test_isolated_pair(q0, sphere, conic):
    assert isolated_pair(q0) == (0, 3)
    assert isolated_pair(conic) == (0, 2)
    assert isolated_pair(sphere) == (0, 3)
    assert isolated_pair(QuadForm.from_polynomial(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])) is None


def test_count_by_pairs_on_the_conic(conic):
    assert count_by_pairs(conic, [1, 2, 4], (0, 2)) == [4, 4, 8]


@pytest.mark.parametrize(
    "name, grid",
    [("conic", [1, 2, 4, 8, 16, 32, 64]), ("q0", [1, 3, 8, 24]), ("sphere", [1, 5, 16]), ("sphere_normalized", [2, 16]), ("q5", [1, 4, 8])],
)
def test_pair_counts_match_enumeration(name, grid, request):
    q = request.getfixturevalue(name)
    fast = [row.N for row in count_points(q, grid)]
    listed = [row.N for row in count_points(q, grid, strategy="box")]
    assert fast == listed


def test_forms_without_isolated_pair_are_counted_by_enumeration():
    q = QuadForm.from_polynomial(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    rows = count_points(q, [4, 8])
    assert [row.N for row in rows] == [len(enumerate_points(q, 4)), len(enumerate_points(q, 8))]


def test_q0_counts_follow_the_segre_product(q0):
    grid = [128, 512, 2048]
    assert [row.N for row in count_points(q0, grid)] == [_segre_count(t) for t in grid]


def test_sphere_counts_follow_the_three_square_formula(sphere):
    grid = [8, 16, 64, 256]
    assert [row.N for row in count_points(sphere, grid)] == [_sphere_count(t) for t in grid]
    assert _sphere_count(16) == 414


def test_count_ratios_are_high_precision(q0, conic):
    row = count_points(q0, [16])[0]
    assert isinstance(row.ratio_k, MP.mpf)
    assert row.ratio_k == 14.5
    assert row.ratio_log is not None
    assert count_points(conic, [4])[0].ratio_log is None
    with pytest.raises(PreconditionError):
        count_points(conic, [0, 4])
    with pytest.raises(SingularFormError):
        count_points(QuadForm.diagonal([1, 0, -1]), [4])


def test_strategies_agree_on_random_one_normalized_forms():
    rng = np.random.default_rng(2024)
    for index in range(50):
        dim, bound = (3, 256) if index < 25 else (4, 16)
        q = _random_one_normalized(rng, dim)
        box = enumerate_array(q, bound, strategy="box")
        divisor = enumerate_array(q, bound, strategy="divisor")
        assert np.array_equal(box, divisor), q.upper()
        assert np.array_equal(enumerate_array(q, bound), divisor)
        grid = [1, bound // 4, bound]
        assert [row.N for row in count_points(q, grid)] == [
            int(np.count_nonzero(np.abs(box).max(axis=1) <= t)) if len(box) else 0 for t in grid
        ]


def test_small_points_span_the_whole_space(conic, q0, sphere, sphere_normalized, q5):
    rng = np.random.default_rng(11)
    forms = [conic, q0, sphere, sphere_normalized, q5] + [_random_one_normalized(rng, 4) for _ in range(20)]
    for q in forms:
        bound = 8 * max(abs(c) for _, _, c in q.upper())
        rows = enumerate_array(q, bound)
        assert matrix_rank((rows.T @ rows).tolist()) == q.dim, q.upper()


def test_conic_points_are_the_veronese_image_of_the_line(conic):
    lines = [ProjPoint(p) for p in primitive_p1_points(16)]
    images = {veronese(p, 2).coords: p.height for p in lines}
    points = enumerate_points(conic, 256)
    assert {p.coords for p in points} == set(images)
    for p in points:
        assert p.height == images[p.coords] ** 2
