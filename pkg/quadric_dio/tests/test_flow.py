from fractions import Fraction

import numpy as np
import pytest

from quadric_dio.dynamics.flow import (
    apply_flow,
    correspondence_bounds,
    correspondence_constant,
    flow_norm,
    identity_frame,
    normalized_frame,
    orbit_profile,
    r_psi,
    rho_flow,
    unipotent_frame,
)
from quadric_dio.errors import DimensionMismatchError, NotIsotropicError, PreconditionError
from quadric_dio.metrics.approx import TargetPoint, ba_estimate, golden_conic_target, partial_quotients
from quadric_dio.metrics.khintchine import PsiFamily
from quadric_dio.points.enumeration import enumerate_array
from quadric_dio.utils.rationals import MP, QuadraticSurd, golden_ratio

POWERS_OF_TWO = [2**e for e in range(11)]


@pytest.mark.parametrize(
    "p, s, norm, dist",
    [((4, 2, 1), 2, 2, 2), ((1, 0, 0), 4, Fraction(1, 4), 0), ((1, 1, 1), 2, 2, 1)],
)
def test_flow_norm_examples(p, s, norm, dist):
    assert flow_norm(p, s) == (norm, dist)


def test_flow_on_two_blocks():
    assert apply_flow((1, 1, 1, 1), [2, 4], m=2) == (Fraction(1, 2), Fraction(1, 4), 4, 2)
    assert flow_norm((1, 1, 1, 1), [2, 4], m=2) == (4, 1)


def test_flow_parameter_errors():
    with pytest.raises(PreconditionError):
        flow_norm((1, 0, 0), Fraction(1, 2))
    with pytest.raises(DimensionMismatchError):
        apply_flow((1, 0, 0, 0), [2], m=2)


def test_correspondence_on_the_conic(conic):
    report = correspondence_bounds(conic, 256, POWERS_OF_TWO)
    assert report.constant == 1
    assert report.checked > 0
    assert report.skipped > 0
    assert report.pairs == report.checked * len(POWERS_OF_TWO)


def test_correspondence_in_three_dimensions(sphere_normalized):
    assert correspondence_constant(sphere_normalized) == 2
    points = enumerate_array(sphere_normalized, 128, strategy="divisor")
    report = correspondence_bounds(sphere_normalized, 128, POWERS_OF_TWO, points=points)
    assert report.constant == 2
    assert report.checked + report.skipped == len(points)


def test_correspondence_rejects_contracting_parameters(conic):
    with pytest.raises(PreconditionError):
        correspondence_bounds(conic, 8, [Fraction(1, 2)])


def test_rho_for_the_identity_frame(conic):
    result = rho_flow(identity_frame(conic), 4, 8)
    assert result.rho == Fraction(1, 4)
    assert result.min_point == (1, 0, 0)
    assert result.certified


def test_golden_unipotent_frame(conic):
    phi = golden_ratio()
    frame = unipotent_frame(conic, [phi], label="golden")
    assert frame.scaling_bound() == QuadraticSurd(Fraction(7, 2), Fraction(3, 2), 5)
    assert frame.direction() == (1, phi, phi * phi)
    assert rho_flow(frame, 1, 8).certified
    assert not rho_flow(frame, 1024, 8).certified


def test_unipotent_frame_inverts(conic):
    frame = unipotent_frame(conic, [Fraction(1, 2)])
    assert frame.pullback((4, 2, 1)) == (4, 0, 0)


def test_orbit_profile_for_a_badly_approximable_target(conic):
    frame = unipotent_frame(conic, [golden_ratio()], label="golden")
    profile = orbit_profile(frame, golden_conic_target(conic), [1, 2, 4, 8], 64)
    summary = profile.summary
    assert abs(float(summary["inf_dist"]) - 0.3819660112501051) < 1e-12
    assert summary["rho_bounded"] and summary["dist_positive"] and summary["ba_positive"]
    assert summary["agree"] is True
    assert summary["rational_target"] is False
    assert len(profile.rows) == 4


def test_orbit_profile_for_a_rational_target(conic):
    frame = unipotent_frame(conic, [Fraction(1, 2)])
    target = TargetPoint.from_chart(conic, [Fraction(1, 2)])
    summary = orbit_profile(frame, target, [1, 2], 16).summary
    assert summary["rational_target"] is True
    assert summary["inf_dist"] == 0


def test_orbit_profile_checks_the_direction(conic):
    frame = unipotent_frame(conic, [golden_ratio()])
    with pytest.raises(PreconditionError):
        orbit_profile(frame, TargetPoint.from_chart(conic, [Fraction(1, 2)]), [1], 16)


def test_normalized_frame(conic, q0, anisotropic3):
    assert normalized_frame(conic).m == 1
    assert normalized_frame(q0).m == 2
    with pytest.raises(NotIsotropicError):
        normalized_frame(anisotropic3)
    with pytest.raises(NotIsotropicError):
        rho_flow(identity_frame(anisotropic3), 2, 16)


def test_r_psi_power_law():
    value = r_psi(PsiFamily(2, 0), 3)
    assert MP.almosteq(value, MP.exp(MP.mpf(-3) / 2), rel_eps=MP.mpf(2) ** -90)


def test_r_psi_rejects_slow_decay():
    with pytest.raises(PreconditionError):
        r_psi(PsiFamily(1, 0), 3)


def test_r_psi_with_a_log_factor():
    t = 10 * MP.log(2)
    lo, hi = MP.mpf(2), MP.mpf(1024)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid * MP.log(mid, 2) < 1024:
            lo = mid
        else:
            hi = mid
    q = (lo + hi) / 2
    assert 140 < q < 146
    value = r_psi(PsiFamily(1, 1), t)
    assert MP.almosteq(value, q / 1024, rel_eps=MP.mpf(2) ** -60)


def _large_quotient_target(big):
    # [0; 2, big, 1, 1, …]
    x = golden_ratio() + (big - 1)
    return x / (x * 2 + 1)


def test_three_verdicts_agree_on_fifty_targets(conic, quadratic_irrationals):
    points = enumerate_array(conic, 64)
    cases = [(alpha, True) for alpha in quadratic_irrationals[:45]]
    cases += [(_large_quotient_target(big), False) for big in (60, 80, 100, 150, 200)]
    for alpha, bounded in cases:
        frame = unipotent_frame(conic, [alpha])
        profile = orbit_profile(frame, TargetPoint.from_chart(conic, [alpha]), POWERS_OF_TWO, 64)
        summary = profile.summary
        assert summary["agree"] is True
        assert summary["ba_positive"] is bounded
        assert summary["rho_bounded"] is bounded
        assert summary["dist_positive"] is bounded
        assert summary["ba_estimate"] == ba_estimate(conic, TargetPoint.from_chart(conic, [alpha]), 64, points=points)
    assert partial_quotients(_large_quotient_target(60), 4) == [0, 2, 60, 1]


def test_rho_never_exceeds_the_previous_minimizer(conic, quadratic_irrationals):
    for alpha in [golden_ratio() - 1, *quadratic_irrationals[:5], _large_quotient_target(100)]:
        frame = unipotent_frame(conic, [alpha])
        profile = orbit_profile(frame, TargetPoint.from_chart(conic, [alpha]), POWERS_OF_TWO, 64)
        for before, row in zip(profile.rows, profile.rows[1:]):
            moved = apply_flow(frame.pullback(before.min_point), row.s)
            assert row.rho <= max(abs(x) for x in moved)
        for row in profile.rows:
            assert row.rho == max(abs(x) for x in apply_flow(frame.pullback(row.min_point), row.s))


def test_distance_to_the_line_is_below_the_flowed_norm():
    rng = np.random.default_rng(6)
    for _ in range(200):
        dim = int(rng.integers(3, 7))
        v = [Fraction(int(n), int(q)) for n, q in zip(rng.integers(-50, 51, dim), rng.integers(1, 9, dim))]
        s = Fraction(int(rng.integers(8, 200)), 8)
        norm, dist = flow_norm(v, s)
        assert dist <= norm
        assert norm == max(abs(x) for x in apply_flow(v, s))
