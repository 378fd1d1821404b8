import math

import mpmath
import numpy as np
import pytest

from src.app.core.exceptions import DomainError
from src.app.lib import chart, kuma_dist
from src.app.lib.mle_fit import fit_mle
from src.app.lib.rng import root_stream
from src.app.schemas.chart import ControlLimits
from src.app.schemas.distribution import IN_CONTROL, SCENARIOS, KumaParams, ShiftSpec
from src.app.schemas.status import LimitSource, PointStatus

# --- Limits from printed estimates and FARs ---

@pytest.mark.parametrize(
    "far, expected_lcl, expected_ucl",
    [
        (0.05, 0.095789, 0.231980),     # plug-in
        (0.04803, 0.095099, 0.232427),  # adjustment A
        (0.00868, 0.070062, 0.248542),  # adjustment B, epsilon = 0
        (0.01854, 0.080204, 0.242000),  # adjustment B, epsilon = 0.20
    ],
)
def test_limits_from_printed_estimates(humidity_estimates, far, expected_lcl, expected_ucl):
    limits = chart.limits_plugin(humidity_estimates, far)
    assert limits.lcl == pytest.approx(expected_lcl, abs=5e-6)
    assert limits.ucl == pytest.approx(expected_ucl, abs=5e-6)
    assert limits.cl == pytest.approx(0.172401, abs=5e-6)
    assert limits.far == far
    assert limits.source == LimitSource.PLUGIN


def test_uniform_limits():
    limits = chart.limits_known(KumaParams(theta1=1, theta2=1), 0.05)
    assert limits.lcl == pytest.approx(0.025, abs=1e-12)
    assert limits.ucl == pytest.approx(0.975, abs=1e-12)
    assert limits.cl == pytest.approx(0.5, abs=1e-12)


def test_mean_center_line():
    p = SCENARIOS[2].params
    limits = chart.limits_known(p, 0.0027, mode="mean")
    assert limits.cl == pytest.approx(kuma_dist.mean(p), rel=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.01, 1.5])
def test_alpha_outside_unit_interval_is_rejected(alpha):
    with pytest.raises(DomainError):
        chart.limits_known(SCENARIOS[1].params, alpha)


def test_plugin_limits_cannot_claim_known_source():
    with pytest.raises(DomainError):
        chart.limits_plugin(SCENARIOS[1].params, 0.0027, source=LimitSource.KNOWN)


def test_limits_must_nest():
    with pytest.raises(ValueError):
        ControlLimits(lcl=0.3, ucl=0.2, cl=0.25, far=0.05)


@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
def test_larger_far_narrows_the_limits(scenario):
    p = SCENARIOS[scenario].params
    previous = chart.limits_known(p, 0.0001)
    for alpha in (0.0005, 0.0027, 0.01, 0.05, 0.2):
        limits = chart.limits_known(p, alpha)
        assert limits.lcl > previous.lcl
        assert limits.ucl < previous.ucl
        previous = limits


@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
@pytest.mark.parametrize("alpha", [0.0027, 0.05])
def test_limits_have_equal_tails(scenario, alpha):
    p = SCENARIOS[scenario].params
    limits = chart.limits_known(p, alpha)
    assert kuma_dist.cdf(limits.lcl, p) == pytest.approx(alpha / 2, abs=1e-12)
    assert kuma_dist.survival(limits.ucl, p) == pytest.approx(alpha / 2, abs=1e-12)


def test_wider_limits_have_smaller_false_alarm_probability():
    p = SCENARIOS[1].params
    limits = chart.limits_known(p, 0.0027)
    wider = [
        ControlLimits(lcl=limits.lcl * 0.9, ucl=limits.ucl, cl=limits.cl, far=0.0027),
        ControlLimits(lcl=limits.lcl, ucl=limits.ucl * 1.1, cl=limits.cl, far=0.0027),
        ControlLimits(lcl=limits.lcl * 0.9, ucl=limits.ucl * 1.1, cl=limits.cl, far=0.0027),
    ]
    base = chart.false_alarm_prob(limits, p)
    for w in wider:
        assert chart.false_alarm_prob(w, p) < base


def test_known_limits_match_high_precision_quantiles():
    p = SCENARIOS[1].params
    limits = chart.limits_known(p, 0.0027)
    with mpmath.workdps(50):
        def q(u):
            return float((1 - (1 - mpmath.mpf(u)) ** (1 / mpmath.mpf(p.theta2))) ** (1 / mpmath.mpf(p.theta1)))
        assert limits.lcl == pytest.approx(q("0.00135"), rel=1e-12)
        assert limits.ucl == pytest.approx(q("0.99865"), rel=1e-12)


# --- Run length ---

@pytest.mark.parametrize("alpha", [0.0027, 0.05])
@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
def test_known_limits_give_nominal_arl(scenario, alpha):
    p = SCENARIOS[scenario].params
    limits = chart.limits_known(p, alpha)
    assert chart.false_alarm_prob(limits, p) == pytest.approx(alpha, rel=1e-12)
    assert chart.conditional_arl(limits, p) == pytest.approx(1 / alpha, abs=1e-10)
    assert chart.run_length_sd(limits, p) == pytest.approx(math.sqrt(1 - alpha) / alpha, rel=1e-10)


def test_nominal_arl_value():
    p = SCENARIOS[1].params
    assert round(chart.conditional_arl(chart.limits_known(p, 0.0027), p), 2) == 370.37


@pytest.mark.parametrize("scenario", sorted(SCENARIOS))
def test_known_limits_cannot_detect_increases_in_theta2(scenario):
    p = SCENARIOS[scenario].params
    limits = chart.limits_known(p, 0.0027)
    arl0 = 1 / 0.0027
    for delta2 in np.round(np.arange(1.1, 1.91, 0.1), 10):
        shifted = chart.apply_shift(p, ShiftSpec(delta2=float(delta2)))
        assert chart.conditional_arl(limits, shifted) > arl0
    # Doubling theta2 squares the upper tail and the lower tail gives back exactly alpha.
    doubled = chart.apply_shift(p, ShiftSpec(delta2=2.0))
    assert chart.conditional_arl(limits, doubled) == pytest.approx(arl0, rel=1e-12)


def test_decreasing_theta1_is_detected_faster():
    p = SCENARIOS[1].params
    limits = chart.limits_known(p, 0.0027)
    shifted = chart.apply_shift(p, ShiftSpec(delta1=0.5))
    assert chart.conditional_arl(limits, shifted) < 1 / 0.0027


@pytest.mark.parametrize("shift", [ShiftSpec(), ShiftSpec(delta1=0.7)], ids=["in-control", "delta1=0.7"])
def test_simulated_run_lengths_match_conditional_arl(shift):
    p0 = SCENARIOS[1].params
    limits = chart.limits_known(p0, 0.05)
    target = chart.apply_shift(p0, shift)
    arl = chart.conditional_arl(limits, target)

    stream = kuma_dist.sample(target, 2_000_000, root_stream(11))
    signal_positions = np.flatnonzero((stream < limits.lcl) | (stream > limits.ucl)) + 1
    run_lengths = np.diff(np.concatenate([[0], signal_positions]))
    assert run_lengths.size > 50_000
    se = chart.run_length_sd(limits, target) / math.sqrt(run_lengths.size)
    assert abs(run_lengths.mean() - arl) < 3 * se


def test_vectorized_arl_matches_scalar():
    p0 = SCENARIOS[2].params
    theta1 = np.array([2.8, 3.0, 3.3])
    theta2 = np.array([11.0, 12.0, 13.5])
    values = chart.conditional_arl_array(theta1, theta2, 0.0027, p0)
    for a, b, v in zip(theta1, theta2, values):
        limits = chart.limits_plugin(KumaParams(theta1=a, theta2=b), 0.0027)
        assert v == pytest.approx(chart.conditional_arl(limits, p0), rel=1e-12)


# --- Phase I application ---

@pytest.fixture(scope="module")
def phase_one_fit(phase1_sample):
    return fit_mle(phase1_sample)


def test_plugin_limits_from_phase_one_fit(phase_one_fit):
    limits = chart.limits_plugin(phase_one_fit.params_hat, 0.0027)
    assert limits.lcl == pytest.approx(0.001866, rel=0.02)
    assert limits.ucl == pytest.approx(0.128041, rel=0.02)


@pytest.mark.parametrize(
    "far, source, expected_lcl, expected_ucl",
    [
        (0.0027, LimitSource.PLUGIN, 0.001866, 0.128041),
        (0.00291, LimitSource.ADJUSTED_A, 0.001937, 0.127322),
        (0.00052, LimitSource.ADJUSTED_B, 0.000821, 0.142913),
        (0.000983, LimitSource.ADJUSTED_B, 0.001128, 0.137363),
    ],
)
def test_phase_one_has_no_signals(phase1_sample, phase_one_fit, far, source, expected_lcl, expected_ucl):
    limits = chart.limits_plugin(phase_one_fit.params_hat, far, source=source)
    assert limits.lcl == pytest.approx(expected_lcl, rel=0.02)
    assert limits.ucl == pytest.approx(expected_ucl, rel=0.02)
    run = chart.run_chart(phase1_sample.values, limits)
    assert run.n_signals == 0
    assert len(run.points) == phase1_sample.m


# --- Point classification ---

@pytest.fixture
def unit_limits() -> ControlLimits:
    return ControlLimits(lcl=0.1, ucl=0.9, cl=0.5, far=0.05, source=LimitSource.PLUGIN)


@pytest.mark.parametrize(
    "value, expected",
    [
        (0.5, PointStatus.IN),
        (0.1, PointStatus.IN),   # on the limit
        (0.9, PointStatus.IN),
        (0.95, PointStatus.ABOVE_UCL),
        (0.05, PointStatus.BELOW_LCL),
    ],
)
def test_point_status(unit_limits, value, expected):
    assert chart.point_status(value, unit_limits) == expected


def test_run_chart_reports_signal_indices(unit_limits):
    run = chart.run_chart([0.5, 0.95, 0.3, 0.02], unit_limits)
    assert run.signal_indices == [2, 4]
    assert [pt.index for pt in run.points] == [1, 2, 3, 4]
    shifted = chart.run_chart([0.5, 0.95], unit_limits, start_index=101)
    assert shifted.signal_indices == [102]


def test_run_chart_rejects_values_outside_unit_interval(unit_limits):
    with pytest.raises(DomainError):
        chart.run_chart([0.5, 1.0], unit_limits)


def test_run_chart_accepts_empty_data(unit_limits):
    assert chart.run_chart([], unit_limits).points == []


# --- Shift grids ---

def test_default_shift_is_the_in_control_model():
    p = SCENARIOS[2].params
    assert ShiftSpec() == IN_CONTROL
    assert chart.apply_shift(p, IN_CONTROL) == p


def test_default_deltas():
    assert chart.DEFAULT_DELTAS[0] == 0.5
    assert chart.DEFAULT_DELTAS[-1] == 2.0
    assert len(chart.DEFAULT_DELTAS) == 16


def test_shift_grid_varies_one_factor_at_a_time():
    grid = chart.shift_grid(delta1=[0.8, 1.0, 1.2], delta2=[1.0, 1.5])
    assert ShiftSpec(delta1=0.8, delta2=1.5) not in grid
    assert ShiftSpec(delta1=1.0, delta2=1.5) in grid
    assert len(grid) == 4


def test_shift_grid_with_simultaneous_shifts():
    grid = chart.shift_grid(delta1=[0.8, 1.2], delta2=[0.9, 1.1], allow_simultaneous=True)
    assert len(grid) == 4


def test_shift_grid_cannot_be_empty():
    with pytest.raises(DomainError):
        chart.shift_grid(delta1=[0.8], delta2=[1.2])
