import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import optimize

from src.app.core.exceptions import DegenerateSampleError
from src.app.lib import kuma_dist, mle_fit
from src.app.lib.rng import root_stream
from src.app.schemas.distribution import SCENARIOS, KumaParams
from src.app.schemas.fit import PhaseISample


@pytest.fixture(scope="module")
def large_sample() -> PhaseISample:
    draws = kuma_dist.sample(SCENARIOS[1].params, 5000, root_stream(2024))
    return PhaseISample(values=tuple(draws.tolist()))


# --- Reference Phase I fit ---

def test_phase_one_fit_matches_published_estimates(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)
    assert fit.converged
    assert 2.00 <= fit.params_hat.theta1 <= 2.02
    assert 404.6 <= fit.params_hat.theta2 <= 406.6
    assert fit.std_errors[0] == pytest.approx(0.16, rel=0.05)
    assert fit.std_errors[1] == pytest.approx(185.77, rel=0.05)


def test_fit_is_independent_of_recording_order(phase1_sample):
    reordered = PhaseISample(values=tuple(reversed(phase1_sample.values)))
    first, second = mle_fit.fit_mle(phase1_sample), mle_fit.fit_mle(reordered)
    assert first.params_hat == second.params_hat
    assert first.loglik == second.loglik


def test_score_vanishes_at_estimate(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)
    d1, d2 = mle_fit.score(fit.params_hat, phase1_sample)
    assert abs(d1) / phase1_sample.m < 1e-6
    assert abs(d2) / phase1_sample.m < 1e-6


def test_estimate_is_a_local_maximum(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)
    p = fit.params_hat
    for f1, f2 in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)]:
        moved = KumaParams(theta1=p.theta1 * f1, theta2=p.theta2 * f2)
        assert mle_fit.log_likelihood(moved, phase1_sample) < fit.loglik


def test_profile_theta2_matches_fit(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)
    assert mle_fit.profile_theta2(fit.params_hat.theta1, phase1_sample) == pytest.approx(fit.params_hat.theta2, rel=1e-10)
    assert mle_fit.profile_log_likelihood(fit.params_hat.theta1, phase1_sample) == pytest.approx(fit.loglik, rel=1e-10)


def test_log_likelihood_equals_sum_of_log_densities(phase1_sample):
    p = KumaParams(theta1=2, theta2=350)
    direct = float(np.sum(kuma_dist.logpdf(np.array(phase1_sample.values), p)))
    assert mle_fit.log_likelihood(p, phase1_sample) == pytest.approx(direct, rel=1e-12)


def test_observed_information_is_symmetric_positive_definite(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)
    info = mle_fit.observed_information(fit.params_hat, phase1_sample)
    np.testing.assert_allclose(info, info.T)
    assert np.all(np.linalg.eigvalsh(info) > 0)


def test_profile_theta2_closed_form_by_hand():
    sample = PhaseISample(values=(0.25, 0.5, 0.75))
    expected = 3 / -(math.log(0.75) + math.log(0.5) + math.log(0.25))
    assert mle_fit.profile_theta2(1.0, sample) == pytest.approx(expected, rel=1e-14)
    assert mle_fit.profile_theta2(1.0, sample) == pytest.approx(1.2674, abs=5e-5)


def test_profile_optimum_equals_joint_optimum(phase1_sample):
    fit = mle_fit.fit_mle(phase1_sample)

    def negative_loglik(log_params):
        theta1, theta2 = np.exp(log_params)
        return -mle_fit.log_likelihood(KumaParams(theta1=theta1, theta2=theta2), phase1_sample)

    start = np.log([1.0, 100.0])
    joint = optimize.minimize(negative_loglik, start, method="Nelder-Mead",
                              options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000})
    assert joint.success
    assert fit.loglik == pytest.approx(-joint.fun, abs=1e-6)
    assert fit.loglik >= -joint.fun - 1e-6


# --- Recovery on simulated data ---

@pytest.mark.parametrize(
    "params, tolerance",
    [
        (KumaParams(theta1=2, theta2=30), (0.05, 1.5)),
        (KumaParams(theta1=1, theta2=1), (0.05, 0.05)),
    ],
    ids=["(2,30)", "uniform"],
)
def test_estimates_are_consistent_at_one_hundred_thousand_draws(params, tolerance):
    draws = kuma_dist.sample(params, 100_000, root_stream(31415))
    fit = mle_fit.fit_mle(PhaseISample(values=tuple(draws.tolist())))
    assert fit.converged
    assert abs(fit.params_hat.theta1 - params.theta1) < tolerance[0]
    assert abs(fit.params_hat.theta2 - params.theta2) < tolerance[1]


def test_large_sample_recovers_parameters(large_sample):
    fit = mle_fit.fit_mle(large_sample)
    true = SCENARIOS[1].params
    assert fit.converged
    assert fit.params_hat.theta1 == pytest.approx(true.theta1, rel=0.1)
    assert fit.params_hat.theta2 == pytest.approx(true.theta2, rel=0.3)
    assert fit.gradient_norm / large_sample.m < 1e-6
    assert fit.iterations > 0


@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
def test_fit_values_converges_for_reference_models(scenario):
    params = SCENARIOS[scenario].params
    draws = kuma_dist.sample(params, 100, root_stream(scenario))
    fit = mle_fit.fit_values(draws)
    assert fit.converged
    assert math.isfinite(fit.theta2)


def test_bracket_expands_when_optimum_is_outside():
    draws = kuma_dist.sample(SCENARIOS[3].params, 200, root_stream(5))
    narrow = mle_fit.fit_values(draws, bracket=(0.5, 2.0))
    wide = mle_fit.fit_values(draws)
    assert narrow.converged
    assert narrow.theta1 == pytest.approx(wide.theta1, rel=1e-6)


# --- Degenerate and invalid samples ---

def test_identical_values_are_degenerate():
    with pytest.raises(DegenerateSampleError):
        mle_fit.fit_mle(PhaseISample(values=(0.3, 0.3)))


@pytest.mark.parametrize("values", [(0.2,), (0.2, 1.2), (0.0, 0.5), (0.5, math.nan)])
def test_invalid_phase_one_samples_are_rejected(values):
    with pytest.raises(ValidationError):
        PhaseISample(values=values)


def test_profile_theta2_rejects_non_positive_theta1(phase1_sample):
    with pytest.raises(DegenerateSampleError):
        mle_fit.profile_theta2(0.0, phase1_sample)
