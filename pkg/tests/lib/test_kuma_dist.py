import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy import integrate

from src.app.core.exceptions import DomainError
from src.app.lib import kuma_dist
from src.app.lib.rng import root_stream
from src.app.schemas.distribution import SCENARIOS, KumaParams

ALL_PARAMS = [s.params for s in SCENARIOS.values()] + [KumaParams(theta1=1, theta2=1)]
U_GRID = np.concatenate([[1e-6, 1e-4, 0.00135], np.linspace(0.01, 0.99, 99), [0.99865, 1 - 1e-4, 1 - 1e-6]])


def _mp_pdf(y: float, p: KumaParams) -> mpmath.mpf:
    y, a, b = mpmath.mpf(y), mpmath.mpf(p.theta1), mpmath.mpf(p.theta2)
    return a * b * y ** (a - 1) * (1 - y ** a) ** (b - 1)


# --- Moments ---

@pytest.mark.parametrize("scenario", list(SCENARIOS.values()), ids=lambda s: str(s.params))
def test_moments_match_reference_table(scenario):
    assert kuma_dist.mean(scenario.params) == pytest.approx(scenario.mean, abs=1e-6)
    assert kuma_dist.variance(scenario.params) == pytest.approx(scenario.variance, abs=1e-6)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_moments_agree_with_quadrature(params):
    first, _ = integrate.quad(lambda y: y * kuma_dist.pdf(y, params), 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    second, _ = integrate.quad(lambda y: y * y * kuma_dist.pdf(y, params), 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert kuma_dist.mean(params) == pytest.approx(first, abs=1e-9)
    assert kuma_dist.variance(params) == pytest.approx(second - first ** 2, abs=1e-9)


def test_uniform_special_case():
    p = KumaParams(theta1=1, theta2=1)
    assert kuma_dist.mean(p) == pytest.approx(0.5, abs=1e-15)
    assert kuma_dist.variance(p) == pytest.approx(1 / 12, abs=1e-15)
    assert kuma_dist.cdf(0.3, p) == pytest.approx(0.3, abs=1e-15)
    assert kuma_dist.quantile(0.7, p) == pytest.approx(0.7, abs=1e-15)


# --- Density, cdf and quantile ---

@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_pdf_integrates_to_one(params):
    total, _ = integrate.quad(lambda y: kuma_dist.pdf(y, params), 0, 1, limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_pdf_matches_high_precision_oracle(params):
    for y in kuma_dist.quantile(np.array([0.01, 0.25, 0.5, 0.75, 0.99]), params):
        assert kuma_dist.pdf(float(y), params) == pytest.approx(float(_mp_pdf(float(y), params)), rel=1e-12)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_cdf_quantile_round_trip(params):
    y = kuma_dist.quantile(U_GRID, params)
    assert np.max(np.abs(kuma_dist.cdf(y, params) - U_GRID)) < 1e-12


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_pdf_is_derivative_of_cdf(params):
    h = 1e-6
    for y in kuma_dist.quantile(np.linspace(0.01, 0.99, 25), params):
        numeric = (kuma_dist.cdf(y + h, params) - kuma_dist.cdf(y - h, params)) / (2 * h)
        assert numeric == pytest.approx(kuma_dist.pdf(y, params), rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_survival_complements_cdf(params):
    y = kuma_dist.quantile(np.array([0.1, 0.5, 0.9]), params)
    np.testing.assert_allclose(kuma_dist.survival(y, params) + kuma_dist.cdf(y, params), 1.0, atol=1e-15)


def test_survival_keeps_relative_accuracy_in_upper_tail():
    p = SCENARIOS[1].params
    y = kuma_dist.quantile(1 - 1e-12, p)
    assert kuma_dist.survival(y, p) == pytest.approx(1e-12, rel=1e-6)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_median_closed_form(params):
    expected = (1 - 2 ** (-1 / params.theta2)) ** (1 / params.theta1)
    assert kuma_dist.median(params) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("params", ALL_PARAMS, ids=str)
def test_logpdf_is_log_of_pdf(params):
    y = kuma_dist.quantile(np.array([0.2, 0.6]), params)
    np.testing.assert_allclose(kuma_dist.logpdf(y, params), np.log(kuma_dist.pdf(y, params)), rtol=1e-12)


@given(
    scenario=st.sampled_from(sorted(SCENARIOS)),
    y1=st.floats(min_value=1e-9, max_value=1 - 1e-9),
    y2=st.floats(min_value=1e-9, max_value=1 - 1e-9),
)
@hsettings(max_examples=200, deadline=None)
def test_cdf_is_monotone(scenario, y1, y2):
    lo, hi = sorted((y1, y2))
    params = SCENARIOS[scenario].params
    assert kuma_dist.cdf(lo, params) <= kuma_dist.cdf(hi, params)
    assert 0.0 <= kuma_dist.cdf(lo, params) <= 1.0


@given(u1=st.floats(min_value=1e-9, max_value=1 - 1e-9), u2=st.floats(min_value=1e-9, max_value=1 - 1e-9))
@hsettings(max_examples=200, deadline=None)
def test_quantile_is_monotone_and_interior(u1, u2):
    lo, hi = sorted((u1, u2))
    params = SCENARIOS[2].params
    q_lo, q_hi = kuma_dist.quantile(lo, params), kuma_dist.quantile(hi, params)
    assert 0.0 < q_lo <= q_hi < 1.0


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_out_of_domain_values_are_rejected(bad):
    p = SCENARIOS[1].params
    with pytest.raises(DomainError):
        kuma_dist.cdf(bad, p)
    with pytest.raises(DomainError):
        kuma_dist.pdf(bad, p)
    with pytest.raises(DomainError):
        kuma_dist.quantile(bad, p)


def test_array_input_rejected_if_any_value_is_outside():
    with pytest.raises(DomainError):
        kuma_dist.cdf(np.array([0.2, 1.0]), SCENARIOS[1].params)


def test_scalar_input_gives_float():
    assert isinstance(kuma_dist.cdf(0.2, SCENARIOS[1].params), float)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (1.0, -2.0)])
def test_log_beta_rejects_non_positive_arguments(a, b):
    with pytest.raises(DomainError):
        kuma_dist.log_beta(a, b)


def test_log_beta_matches_gamma_functions():
    expected = math.lgamma(1.5) + math.lgamma(30) - math.lgamma(31.5)
    assert kuma_dist.log_beta(1.5, 30) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize(
    "a, b",
    [(0.01, 0.5), (1.5, 30), (2, 350), (1 + 1 / 12, 100), (0.5, 1e5), (50, 5e4), (1e3, 1e5), (1e5, 1e5), (7.3, 9.1e4)],
)
def test_log_beta_has_twelve_significant_digits(a, b):
    with mpmath.workdps(40):
        expected = float(mpmath.log(mpmath.beta(mpmath.mpf(a), mpmath.mpf(b))))
    assert kuma_dist.log_beta(a, b) == pytest.approx(expected, rel=1e-12)


def test_extreme_quantile_matches_high_precision_oracle():
    p = SCENARIOS[1].params
    with mpmath.workdps(50):
        u = mpmath.mpf("0.00135")
        expected = float((1 - (1 - u) ** (1 / mpmath.mpf(p.theta2))) ** (1 / mpmath.mpf(p.theta1)))
    assert kuma_dist.quantile(0.00135, p) == pytest.approx(expected, rel=1e-12)


# --- Sampling ---

def test_sample_is_reproducible_and_interior():
    p = KumaParams(theta1=2, theta2=350)
    first = kuma_dist.sample(p, 100, root_stream(42))
    second = kuma_dist.sample(p, 100, root_stream(42))
    np.testing.assert_array_equal(first, second)
    assert np.all((first > 0) & (first < 1))


def test_sample_mean_is_close_to_distribution_mean():
    p = KumaParams(theta1=2, theta2=350)
    draws = kuma_dist.sample(p, 200_000, root_stream(7))
    se = math.sqrt(kuma_dist.variance(p) / draws.size)
    assert abs(draws.mean() - kuma_dist.mean(p)) < 4 * se


def test_sample_rejects_non_positive_size():
    with pytest.raises(DomainError):
        kuma_dist.sample(SCENARIOS[1].params, 0, root_stream(1))


def test_density_curve_grid():
    y, density = kuma_dist.density_curve(SCENARIOS[3].params, points=50)
    assert y.shape == density.shape == (50,)
    assert 0 < y[0] and y[-1] < 1
    assert np.all(np.diff(y) > 0)
    with pytest.raises(DomainError):
        kuma_dist.density_curve(SCENARIOS[3].params, points=1)
