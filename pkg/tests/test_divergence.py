import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdspeckle.divergence import (
    BHATTACHARYYA,
    DIVERGENCES,
    HELLINGER,
    KULLBACK_LEIBLER,
    TRIANGULAR,
    chi2_survival,
    generic_divergence,
    kl_statistic,
    kl_statistic_array,
    scaled_statistic,
    symmetrized_distance,
    test_equal_distributions as equal_distributions,
    weight,
)
from sdspeckle.gamma_model import GammaParams, fit_summaries, sample_gamma

looks_st = st.floats(0.5, 20)
lambda_st = st.floats(0.1, 1e3)
params_st = st.builds(GammaParams, looks_st, lambda_st)


def gamma_kl(p1, p2):
    """Closed-form KL divergence between Gamma laws, shape/rate form, via mpmath."""
    a1, b1 = mpmath.mpf(p1.looks), mpmath.mpf(p1.looks) / p1.backscatter
    a2, b2 = mpmath.mpf(p2.looks), mpmath.mpf(p2.looks) / p2.backscatter
    value = (
        (a1 - a2) * mpmath.digamma(a1)
        - mpmath.loggamma(a1)
        + mpmath.loggamma(a2)
        + a2 * (mpmath.log(b1) - mpmath.log(b2))
        + a1 * (b2 - b1) / b1
    )
    return float(value)


def test_kl_against_closed_form():
    p1, p2 = GammaParams(3, 200), GammaParams(3, 100)
    assert generic_divergence(KULLBACK_LEIBLER, p1, p2) == pytest.approx(
        3 * (2 - 1 - math.log(2)), rel=1e-8
    )


def test_symmetrized_kl_against_closed_form():
    p1, p2 = GammaParams(3, 200), GammaParams(3, 100)
    expected = 0.5 * (3 * (2 - 1 - math.log(2)) + 3 * (0.5 - 1 - math.log(0.5)))
    assert symmetrized_distance(KULLBACK_LEIBLER, p1, p2) == pytest.approx(expected, rel=1e-8)


def test_kl_random_pairs_match_oracle_and_are_nonnegative(rng):
    for _ in range(50):
        p1 = GammaParams(rng.uniform(0.8, 12), rng.uniform(1, 500))
        p2 = GammaParams(rng.uniform(0.8, 12), rng.uniform(1, 500))
        d = generic_divergence(KULLBACK_LEIBLER, p1, p2)
        assert d >= 0
        assert d == pytest.approx(gamma_kl(p1, p2), rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("spec", list(DIVERGENCES.values()), ids=list(DIVERGENCES))
def test_identical_laws_give_zero(spec):
    p = GammaParams(4, 150)
    assert abs(generic_divergence(spec, p, p)) < 1e-10


def test_hellinger_against_closed_form():
    # 1 - integral sqrt(f1 f2) for equal shapes
    looks, l1, l2 = 3.0, 200.0, 100.0
    bc = (2 * math.sqrt(l1 * l2) / (l1 + l2)) ** looks
    p1, p2 = GammaParams(looks, l1), GammaParams(looks, l2)
    assert generic_divergence(HELLINGER, p1, p2) == pytest.approx(1 - bc, rel=1e-8)
    assert generic_divergence(BHATTACHARYYA, p1, p2) == pytest.approx(-math.log(bc), rel=1e-8)


def test_k_constants():
    assert KULLBACK_LEIBLER.k == pytest.approx(1.0)
    assert HELLINGER.k == pytest.approx(4.0)
    assert BHATTACHARYYA.k == pytest.approx(4.0)
    assert TRIANGULAR.k > 0


@given(params_st, params_st)
def test_symmetry(p1, p2):
    for spec in (KULLBACK_LEIBLER, TRIANGULAR):
        assert symmetrized_distance(spec, p1, p2) == symmetrized_distance(spec, p2, p1)


def test_statistic_hand_value():
    p1, p2 = GammaParams(3, 200), GammaParams(3, 100)
    assert kl_statistic(p1, 9, p2, 9) == pytest.approx(6.75, rel=1e-14)
    assert scaled_statistic(KULLBACK_LEIBLER, p1, 9, p2, 9) == pytest.approx(6.75, rel=1e-7)


@given(looks_st, looks_st, lambda_st, st.integers(2, 100), st.integers(2, 100))
def test_statistic_zero_for_equal_means(l1, l2, lam, m, n):
    assert kl_statistic(GammaParams(l1, lam), m, GammaParams(l2, lam), n) == 0.0


@given(params_st, st.integers(2, 100), params_st, st.integers(2, 100))
def test_statistic_symmetric_and_nonnegative(p1, m, p2, n):
    s = kl_statistic(p1, m, p2, n)
    assert s == kl_statistic(p2, n, p1, m)
    assert s >= 0
    assert (s == 0) == (p1.backscatter == p2.backscatter)


def test_statistic_array_matches_scalar(rng):
    l1, l2 = rng.uniform(1, 8, 30), rng.uniform(1, 8, 30)
    m1, m2 = rng.uniform(1, 300, 30), rng.uniform(1, 300, 30)
    s = kl_statistic_array(l1, m1, 9, l2, m2, 7)
    for i in range(30):
        assert s[i] == kl_statistic(GammaParams(l1[i], m1[i]), 9, GammaParams(l2[i], m2[i]), 7)


def test_chi2_critical_values():
    assert chi2_survival(0.0, 1) == 1.0
    assert chi2_survival(3.841459, 1) == pytest.approx(0.05, abs=1e-6)
    assert chi2_survival(5.991465, 2) == pytest.approx(0.05, abs=1e-6)


@given(st.floats(0, 700), st.sampled_from([1, 2, 3]))
def test_chi2_matches_mpmath(s, dof):
    expected = float(mpmath.gammainc(dof / 2, s / 2, mpmath.inf, regularized=True))
    assert chi2_survival(s, dof) == pytest.approx(expected, rel=1e-10, abs=1e-300)


@given(st.floats(0, 600))
def test_chi2_two_dof_closed_form(s):
    assert chi2_survival(s, 2) == pytest.approx(math.exp(-s / 2), rel=1e-10, abs=1e-300)


def test_chi2_strictly_decreasing():
    p = chi2_survival(np.linspace(0, 60, 400), 1)
    assert np.all(np.diff(p) < 0)


def test_chi2_rejects_bad_input():
    with pytest.raises(ValueError):
        chi2_survival(-1.0, 1)
    with pytest.raises(ValueError):
        chi2_survival(1.0, 0)


def test_identical_samples():
    z = sample_gamma(GammaParams(3, 200), 49, 1)
    r = equal_distributions(z, z.copy())
    assert r.statistic == 0 and r.p_value == 1


def _rejection_rate(lam2, reps, seed, dof=1, alpha=0.10):
    g = np.random.default_rng(seed)
    z1 = 200 * g.standard_gamma(3, size=(reps, 49)) / 3
    z2 = lam2 * g.standard_gamma(3, size=(reps, 49)) / 3

    def fit(z):
        return fit_summaries(49, z.sum(1), np.log(z).sum(1), (z * z).sum(1))

    (l1, m1), (l2, m2) = fit(z1), fit(z2)
    p = chi2_survival(kl_statistic_array(l1, m1, 49, l2, m2, 49), dof)
    return float(np.mean(p < alpha))


def test_null_calibration():
    assert 0.06 <= _rejection_rate(200, 4000, 2) <= 0.15


def test_power():
    assert _rejection_rate(400, 2000, 3) > 0.9


def test_vectorized_rate_matches_scalar_path():
    g = np.random.default_rng(8)
    for _ in range(20):
        z1 = 200 * g.standard_gamma(3, 49) / 3
        z2 = 260 * g.standard_gamma(3, 49) / 3
        r = equal_distributions(z1, z2)
        (l1, m1) = fit_summaries(49, z1.sum(), np.log(z1).sum(), (z1 * z1).sum())
        (l2, m2) = fit_summaries(49, z2.sum(), np.log(z2).sum(), (z2 * z2).sum())
        assert r.statistic == pytest.approx(float(kl_statistic_array(l1, m1, 49, l2, m2, 49)))


@pytest.mark.parametrize("p, expected", [(0.2, 1.0), (0.05, 0.0), (0.075, 0.5), (0.1, 1.0)])
def test_weight_examples(p, expected):
    assert weight(p, 0.1) == pytest.approx(expected, abs=1e-15)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.99))
def test_weight_monotone_in_p(p1, p2, eta):
    lo, hi = sorted((p1, p2))
    assert 0 <= weight(lo, eta) <= weight(hi, eta) <= 1


@given(st.floats(0, 1), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_weight_nonincreasing_in_threshold(p, e1, e2):
    lo, hi = sorted((e1, e2))
    assert weight(p, hi) <= weight(p, lo)
