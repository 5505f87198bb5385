from fractions import Fraction

import numpy as np
import pytest

from quadric_dio.errors import DimensionMismatchError, PreconditionError
from quadric_dio.forms.loader import builtin_form
from quadric_dio.metrics.approx import (
    TargetPoint,
    ba_estimate,
    convergents,
    dirichlet_profile,
    form_value,
    golden_conic_target,
    liouville_number,
    partial_quotients,
    proj_distance,
    real_isotropic_chart,
    spectrum,
    strong_dirichlet_profile,
    uniformity_profile,
)
from quadric_dio.points.enumeration import enumerate_array, enumerate_points
from quadric_dio.utils.rationals import MP, QuadraticSurd, golden_ratio, to_mpf


@pytest.fixture
def golden(conic) -> TargetPoint:
    return golden_conic_target(conic)


def test_proj_distance_examples():
    assert proj_distance((1, 0, 0), (2, 0, 0)) == 0
    assert proj_distance((1, 0), (0, 1)) == 1
    assert proj_distance((1, 0), (2, 1)) == Fraction(1, 2)


def test_proj_distance_errors():
    with pytest.raises(DimensionMismatchError):
        proj_distance((1, 0), (1, 0, 0))
    with pytest.raises(PreconditionError):
        proj_distance((0, 0), (1, 0))


def test_target_must_lie_on_the_quadric(conic):
    with pytest.raises(PreconditionError):
        TargetPoint(conic, (1, 1, 2))
    with pytest.raises(PreconditionError):
        TargetPoint(conic, (0, 0, 0))
    assert form_value(conic, (4, 2, 1)) == 0


def test_golden_target_is_exact(golden):
    phi = golden_ratio()
    assert golden.exact
    assert not golden.rational
    assert golden.as_point() is None
    assert golden.coords[1] == phi


def test_golden_spectrum_follows_fibonacci_ratios(conic, golden):
    records = spectrum(conic, golden, 25)
    assert records[-1].point.coords == (9, 15, 25)
    assert records[-1].height == 25
    records = spectrum(conic, golden, 64)
    assert records[-1].point.coords == (25, 40, 64)
    heights = [r.height for r in records]
    dists = [r.dist for r in records]
    assert heights == sorted(set(heights))
    assert all(a > b for a, b in zip(dists, dists[1:]))


def test_spectrum_record_is_the_brute_force_minimum(conic, golden):
    records = spectrum(conic, golden, 64)
    best = min(proj_distance(golden, p) for p in enumerate_points(conic, 64))
    assert records[-1].dist == best


def test_spectrum_stops_on_a_rational_target(conic):
    target = TargetPoint.from_chart(conic, [Fraction(1, 2)])
    assert target.rational
    assert target.as_point().coords == (4, 2, 1)
    records = spectrum(conic, target, 64)
    assert records[-1].dist == 0
    assert records[-1].height == 4


def test_anisotropic_target_has_empty_spectrum(anisotropic3):
    target = TargetPoint(anisotropic3, (QuadraticSurd(0, 1, 3), 0, 1))
    assert spectrum(anisotropic3, target, 50) == []
    assert ba_estimate(anisotropic3, target, 50) is None
    rows = dirichlet_profile(anisotropic3, target, [10, 50])
    assert [row.value for row in rows] == [None, None]


def test_golden_dirichlet_profile(conic, golden):
    rows = dirichlet_profile(conic, golden, [1, 4, 16, 64, 256])
    values = [float(row.value) for row in rows]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert all(0.5 <= v <= 0.55 for v in values[1:])
    assert rows[1].best_point == (1, 2, 4)
    assert abs(values[1] - 0.528) < 1e-3


def test_golden_strong_dirichlet_profile(conic, golden):
    rows = strong_dirichlet_profile(conic, golden, [4, 16, 64, 256])
    assert all(row.value is not None and row.value <= 1.5 for row in rows)


def test_ba_estimate_is_stable_for_the_golden_target(conic, golden):
    small = float(ba_estimate(conic, golden, 256))
    large = float(ba_estimate(conic, golden, 1024))
    assert small >= 0.1
    assert large >= 0.1
    assert abs(small - large) <= 0.2 * small


def test_liouville_target_is_very_well_approximable(conic):
    target = TargetPoint.from_chart(conic, [liouville_number()], label="liouville")
    assert not target.exact
    rows = dirichlet_profile(conic, target, [16, 4096])
    assert rows[0].value > 0.05
    assert rows[1].value < 0.01


def test_partial_quotients():
    assert partial_quotients(golden_ratio(), 8) == [1] * 8
    assert partial_quotients(Fraction(7, 3), 5) == [2, 3]
    assert partial_quotients(MP.mpf("0.5"), 5) == [0, 2]


def test_convergents():
    assert convergents(golden_ratio(), 6) == [1, 2, Fraction(3, 2), Fraction(5, 3), Fraction(8, 5), Fraction(13, 8)]
    assert convergents(Fraction(7, 3), 5) == [2, Fraction(7, 3)]


def test_real_isotropic_chart_of_the_five_variable_form(q5):
    w, j = real_isotropic_chart(q5)
    assert j == 2
    assert w[0] == QuadraticSurd(Fraction(0), Fraction(1), 3)
    assert w[1] == 0 and w[2] == 1
    assert TargetPoint.from_chart(q5, w).coords[-1] == 0


def test_real_isotropic_chart_needs_an_irrational_direction(conic, q0, sphere_normalized):
    for q in (conic, q0, sphere_normalized):
        with pytest.raises(PreconditionError):
            real_isotropic_chart(q)


def test_uniformity_sequence_approaches_the_limit(q5):
    grid = [1, 2, 4, 8]
    points = enumerate_array(q5, 8)
    rows = uniformity_profile(q5, grid, 4, points=points)
    assert [r.offset for r in rows] == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
    assert rows[0].limit_dist == 1
    assert all(a.limit_dist > b.limit_dist > 0 for a, b in zip(rows, rows[1:]))
    w, j = real_isotropic_chart(q5)
    for row in rows:
        u = list(w)
        u[j] = u[j] + row.offset
        target = TargetPoint.from_chart(q5, u)
        strong = strong_dirichlet_profile(q5, target, grid, points=points)
        weak = dirichlet_profile(q5, target, grid, points=points)
        assert row.strong_dirichlet == max(r.value for r in strong)
        assert row.strong_dirichlet > 0
        assert row.dirichlet == max(r.value for r in weak)
        assert row.best_point is not None


def test_uniformity_sequence_needs_a_step(q5):
    with pytest.raises(PreconditionError):
        uniformity_profile(q5, [1, 2], 0)


@pytest.fixture(scope="module")
def conic_points():
    return enumerate_array(builtin_form("conic"), 4096)


def _convergent_minimum(alpha, t_max):
    """高度 ≤ t_max 的渐近分数上 q·|qα − p| 的最小值，以及对应范围内最大的下一个部分商。"""
    quotients = partial_quotients(alpha, 40)
    values, largest = [], 0
    for n, c in enumerate(convergents(alpha, 40)):
        q, p = c.denominator, c.numerator
        if q * q > t_max:
            break
        values.append(abs(alpha * q - p) * q)
        largest = max(largest, quotients[n + 1])
    return min(values), largest


def test_ba_estimate_on_quadratic_irrationals_matches_convergents(conic, conic_points, quadratic_irrationals):
    for alpha in quadratic_irrationals:
        target = TargetPoint.from_chart(conic, [alpha])
        ba = ba_estimate(conic, target, 4096, points=conic_points)
        expected, largest = _convergent_minimum(alpha, 4096)
        assert ba == expected
        assert Fraction(1, largest + 2) < ba < Fraction(1, largest)
        assert ba > Fraction(1, 50)


def test_ba_estimate_on_random_reals_is_pinned_by_partial_quotients(conic, conic_points):
    rng = np.random.default_rng(50)
    for x in rng.uniform(0.02, 0.48, size=50):
        alpha = MP.mpf(float(x))
        target = TargetPoint.from_chart(conic, [alpha])
        ba = ba_estimate(conic, target, 4096, points=conic_points)
        expected, largest = _convergent_minimum(alpha, 4096)
        assert MP.almosteq(ba, expected, rel_eps=MP.mpf(2) ** -90)
        assert to_mpf(Fraction(1, largest + 2)) < ba < to_mpf(Fraction(1, largest))


def test_ba_estimate_collapses_with_a_large_partial_quotient(conic, conic_points):
    # [0; 2, A, 1, 1, …]：第二个渐近分数 1/2 的误差约为 1/(2A)
    for big in (60, 200, 1000):
        x = golden_ratio() + (big - 1)
        alpha = x / (x * 2 + 1)
        assert partial_quotients(alpha, 4) == [0, 2, big, 1]
        ba = ba_estimate(conic, TargetPoint.from_chart(conic, [alpha]), 4096, points=conic_points)
        assert ba < Fraction(1, big)


def test_strong_dirichlet_stays_below_one_on_conic_targets(conic, conic_points):
    rng = np.random.default_rng(20)
    grid = [4**e for e in range(6)]
    for x in rng.uniform(0.05, 0.45, size=20):
        target = TargetPoint.from_chart(conic, [MP.mpf(float(x))])
        rows = strong_dirichlet_profile(conic, target, grid, points=conic_points)
        assert [row.T for row in rows] == grid
        assert all(row.value < 1 for row in rows)


def test_strong_dirichlet_stays_below_one_on_sphere_targets(sphere_normalized):
    points = enumerate_array(sphere_normalized, 64)
    rng = np.random.default_rng(21)
    grid = [2**e for e in range(7)]
    for x in rng.uniform(0.05, 0.45, size=20):
        target = TargetPoint.from_chart(sphere_normalized, [MP.mpf(float(x)), 0])
        rows = strong_dirichlet_profile(sphere_normalized, target, grid, points=points)
        assert all(row.value < 1 for row in rows)
