import math
from fractions import Fraction

import numpy as np
import pytest

from quadric_dio.errors import PreconditionError
from quadric_dio.metrics.khintchine import (
    CASE_LEFT,
    CASE_MIDDLE,
    CASE_RIGHT,
    VERDICT_CONVERGES,
    VERDICT_DIVERGES,
    PsiFamily,
    covering_bound,
    covering_case,
    height_band_angles,
    mc_limsup_measure,
    series_sum,
)
from quadric_dio.utils.rationals import MP

PSI_EXCEPTIONAL = PsiFamily(1, 1)


def test_psi_values():
    assert MP.almosteq(PsiFamily(2, 0).value(4), MP.mpf(1) / 16)
    assert MP.almosteq(PSI_EXCEPTIONAL.at_dyadic(3), MP.mpf(1) / 24)
    assert PsiFamily(1, 1, scale=0).value(8) == 0
    with pytest.raises(PreconditionError):
        PSI_EXCEPTIONAL.value(1)
    with pytest.raises(PreconditionError):
        PsiFamily(1, 0).value(0)
    with pytest.raises(PreconditionError):
        PsiFamily(1, 0, scale=-1)


def test_decay_properties():
    assert PsiFamily(2, 0).satisfies_decay
    assert PSI_EXCEPTIONAL.satisfies_decay
    assert not PsiFamily(1, 0).satisfies_decay
    assert PsiFamily(0, 1).tends_to_zero
    assert not PsiFamily(0, 0).tends_to_zero


def test_convergent_power_series():
    result = series_sum("convergence3", PsiFamily(2, 0), 2)
    assert result.verdict == VERDICT_CONVERGES
    assert MP.almosteq(result.partial, MP.mpf(1) / 3, rel_eps=MP.mpf(10) ** -15)


def test_divergent_power_series():
    result = series_sum("convergence3", PsiFamily(1, 0), 2)
    assert result.verdict == VERDICT_DIVERGES
    assert result.exponents == (0, 0, 0)


def test_exceptional_series_split():
    loglog = series_sum("loglog", PSI_EXCEPTIONAL, 2, exceptional=True)
    assert loglog.exponents == (0, -2, 1)
    assert loglog.verdict == VERDICT_CONVERGES
    power = series_sum("convergence3", PSI_EXCEPTIONAL, 2, exceptional=True)
    assert power.exponents == (0, -1, 0)
    assert power.verdict == VERDICT_DIVERGES


def test_series_hypotheses():
    with pytest.raises(PreconditionError):
        series_sum("loglog", PsiFamily(1, 0), 2)
    with pytest.raises(PreconditionError):
        series_sum("convergence3", PsiFamily(2, 0), 2, s=3)
    with pytest.raises(PreconditionError):
        series_sum("loglog2", PsiFamily(1, 0), 2, s=1)
    with pytest.raises(PreconditionError):
        series_sum("loglog", PSI_EXCEPTIONAL, 3, exceptional=True)
    with pytest.raises(PreconditionError):
        series_sum("harmonic", PsiFamily(2, 0), 2)


def test_zero_psi_converges():
    result = series_sum("convergence3", PsiFamily(1, 0, scale=0), 2)
    assert result.verdict == VERDICT_CONVERGES
    assert result.partial == 0


def test_covering_cases_for_the_exceptional_psi():
    cases = [covering_case(PSI_EXCEPTIONAL, 16, n) for n in range(17)]
    assert cases == [CASE_LEFT] * 7 + [CASE_MIDDLE] * 3 + [CASE_RIGHT] * 7
    with pytest.raises(PreconditionError):
        covering_case(PSI_EXCEPTIONAL, 16, 17)


@pytest.mark.parametrize("big_n", [10, 11])
def test_covering_without_log_factor(big_n):
    result = covering_bound(PsiFamily(1, 0), big_n)
    assert all(row.case != CASE_MIDDLE for row in result.rows)
    assert MP.almosteq(result.naive, big_n + 1)
    assert result.refined <= 2
    assert result.log_form is None


def test_covering_with_zero_scale():
    result = covering_bound(PsiFamily(1, 1, scale=0), 8)
    assert result.refined == 0
    assert result.naive == 0
    assert result.ratio is None


def test_covering_precondition():
    with pytest.raises(PreconditionError):
        covering_bound(PsiFamily(Fraction(1, 2), 0), 8)
    with pytest.raises(PreconditionError):
        covering_bound(PsiFamily(1, 0, scale=2), 8)
    with pytest.raises(PreconditionError):
        covering_bound(PSI_EXCEPTIONAL, 0)


def test_refined_bound_gains_a_log_over_naive():
    for big_n in range(4, 21):
        result = covering_bound(PSI_EXCEPTIONAL, big_n)
        assert result.refined <= result.naive
        band = float(result.ratio) / (math.log2(big_n) / big_n)
        assert 0.5 <= band <= 4, big_n
        assert result.log_form is not None


def test_height_bands():
    assert len(height_band_angles(0)) == 4
    angles = height_band_angles(1)
    assert len(angles) == 12
    assert np.all(np.diff(angles) >= 0)
    assert not angles.flags.writeable
    with pytest.raises(PreconditionError):
        height_band_angles(-1)


def test_monte_carlo_respects_the_covering_bound():
    covering = covering_bound(PSI_EXCEPTIONAL, 10)
    result = mc_limsup_measure(PSI_EXCEPTIONAL, 10, 100_000, seed=0)
    assert result.samples == 100_000
    assert 0 < result.estimate < 1
    assert result.estimate - 3 * result.stderr <= 8 * float(covering.refined)


def test_monte_carlo_is_independent_of_threads():
    single = mc_limsup_measure(PSI_EXCEPTIONAL, 6, 20_000, seed=3, chunk_size=5_000, threads=1)
    pooled = mc_limsup_measure(PSI_EXCEPTIONAL, 6, 20_000, seed=3, chunk_size=5_000, threads=4)
    assert single == pooled
    assert single.chunks == 4


def test_monte_carlo_guards():
    with pytest.raises(PreconditionError):
        mc_limsup_measure(PSI_EXCEPTIONAL, 6, 999)
    saturated = mc_limsup_measure(PsiFamily(0, 0, scale=2), 4, 1_000)
    assert saturated.estimate == 1
    assert saturated.stderr == 0


def test_monte_carlo_grows_with_psi():
    # 同一种子下样本点相同，半径越大命中越多
    results = [
        mc_limsup_measure(PsiFamily(a, b), 6, 5_000, seed=11)
        for a in (Fraction(1, 2), Fraction(3, 4), 1, Fraction(3, 2))
        for b in (0, Fraction(1, 2), 1)
    ]
    results.sort(key=lambda r: r.radius)
    for smaller, larger in zip(results, results[1:]):
        assert smaller.hits <= larger.hits
        assert smaller.estimate <= larger.estimate + 3 * (smaller.stderr + larger.stderr)
