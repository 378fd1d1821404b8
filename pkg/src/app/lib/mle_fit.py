"""Maximum-likelihood estimation of Kumaraswamy parameters.

The log-likelihood is the one implied by the density,

    l(t1, t2) = m ln(t1 t2) + (t1 - 1) sum ln x + (t2 - 1) sum ln(1 - x^t1),

and for fixed t1 it is maximized in closed form by t2(t1) = -m / sum ln(1 - x^t1).
The fit maximizes the resulting one-dimensional profile over ln t1.
"""
import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import optimize, special

from src.app.core.config import settings
from src.app.core.exceptions import DegenerateSampleError
from src.app.schemas.distribution import KumaParams
from src.app.schemas.fit import FitResult, PhaseISample

logger = logging.getLogger(__name__)

_SMALL_POWER = 1e-8


class ArrayFit(NamedTuple):
    """Bare fit outcome used by the Monte Carlo engine (no standard errors)."""
    theta1: float
    theta2: float
    converged: bool
    gradient_norm: float
    evaluations: int


def _log1m_pow(log_x: np.ndarray, theta1: float) -> np.ndarray:
    """ln(1 - x^theta1) from ln x, accurate for x^theta1 near 0 and near 1."""
    a = theta1 * log_x
    out = np.empty_like(a)
    near_one = a > -0.6931471805599453  # x^theta1 > 1/2
    out[near_one] = np.log(-np.expm1(a[near_one]))
    out[~near_one] = np.log1p(-np.exp(a[~near_one]))
    return out


def _log_neg_sum_log1m(log_x: np.ndarray, theta1: float) -> float:
    """ln(-sum ln(1 - x^theta1)); stays finite when every x^theta1 underflows."""
    a = theta1 * log_x
    terms = np.empty_like(a)
    small = a < math.log(_SMALL_POWER)
    z_small = np.exp(a[small])
    # -ln(1 - z) = z (1 + z/2 + ...), so its log is a + z/2 to O(z^2).
    terms[small] = a[small] + 0.5 * z_small
    terms[~small] = np.log(-_log1m_pow(log_x[~small], theta1))
    return float(special.logsumexp(terms))


def _values(sample: PhaseISample) -> np.ndarray:
    # Sorting makes every sum, hence the fit, independent of the recording order.
    return np.sort(np.asarray(sample.values, dtype=float))


def _loglik_from_logs(theta1: float, theta2: float, log_x: np.ndarray) -> float:
    m = log_x.size
    return float(m * (math.log(theta1) + math.log(theta2)) + (theta1 - 1.0) * log_x.sum()
                 + (theta2 - 1.0) * _log1m_pow(log_x, theta1).sum())


def log_likelihood(params: KumaParams, sample: PhaseISample) -> float:
    return _loglik_from_logs(params.theta1, params.theta2, np.log(_values(sample)))


def _score_from_logs(theta1: float, theta2: float, log_x: np.ndarray) -> np.ndarray:
    m = log_x.size
    log1m = _log1m_pow(log_x, theta1)
    # x^t1 / (1 - x^t1) = exp(t1 ln x - ln(1 - x^t1))
    odds = np.exp(theta1 * log_x - log1m)
    d1 = m / theta1 + log_x.sum() - (theta2 - 1.0) * float(np.sum(odds * log_x))
    d2 = m / theta2 + float(log1m.sum())
    return np.array([d1, d2])


def score(params: KumaParams, sample: PhaseISample) -> Tuple[float, float]:
    """Analytic gradient (dl/dtheta1, dl/dtheta2)."""
    g = _score_from_logs(params.theta1, params.theta2, np.log(_values(sample)))
    return float(g[0]), float(g[1])


def profile_theta2(theta1: float, sample: PhaseISample) -> float:
    """Closed-form maximizer of l over theta2 for fixed theta1: -m / sum ln(1 - x^theta1)."""
    if not theta1 > 0:
        raise DegenerateSampleError(f"theta1 must be positive, got {theta1}")
    log_x = np.log(_values(sample))
    total = float(_log1m_pow(log_x, theta1).sum())
    if total == 0.0 or not math.isfinite(total):
        raise DegenerateSampleError(f"sum ln(1 - x^theta1) is {total} at theta1={theta1}; no finite theta2 maximizer")
    return -log_x.size / total


def _profile_loglik(theta1: float, log_x: np.ndarray, sum_log_x: float) -> float:
    m = log_x.size
    log_neg_t = _log_neg_sum_log1m(log_x, theta1)
    # (t2 - 1) * T with t2 = -m/T collapses to -m - T.
    return (m * math.log(theta1) + m * (math.log(m) - log_neg_t)
            + (theta1 - 1.0) * sum_log_x - m + math.exp(log_neg_t))


def profile_log_likelihood(theta1: float, sample: PhaseISample) -> float:
    log_x = np.log(_values(sample))
    return _profile_loglik(theta1, log_x, float(log_x.sum()))


def fit_values(values: np.ndarray,
               bracket: Optional[Tuple[float, float]] = None,
               xtol: Optional[float] = None,
               max_iter: Optional[int] = None,
               max_expansions: Optional[int] = None,
               gradient_tol: Optional[float] = None) -> ArrayFit:
    """Fit pre-validated interior values. Raises DegenerateSampleError if all values are equal."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size < 2 or x[0] == x[-1]:
        raise DegenerateSampleError(f"cannot fit a sample of {x.size} identical value(s)")

    low, high = bracket or (settings.MLE_BRACKET_LOW, settings.MLE_BRACKET_HIGH)
    xtol = settings.MLE_XTOL if xtol is None else xtol
    max_iter = settings.MLE_MAX_ITER if max_iter is None else max_iter
    max_expansions = settings.MLE_MAX_BRACKET_EXPANSIONS if max_expansions is None else max_expansions
    gradient_tol = settings.GRADIENT_TOL if gradient_tol is None else gradient_tol

    log_x = np.log(x)
    sum_log_x = float(log_x.sum())
    m = x.size

    def objective(s: float) -> float:
        return -_profile_loglik(math.exp(s), log_x, sum_log_x)

    lo, hi = math.log(low), math.log(high)
    evaluations = 0
    success = False
    s_hat = 0.0
    for _ in range(max_expansions + 1):
        result = optimize.minimize_scalar(objective, bounds=(lo, hi), method='bounded',
                                          options={'xatol': xtol, 'maxiter': max_iter})
        evaluations += int(result.nfev)
        s_hat = float(result.x)
        edge = 1e-6 * (hi - lo)
        at_low, at_high = s_hat - lo < edge, hi - s_hat < edge
        if not (at_low or at_high):
            success = bool(result.success)
            break
        # Optimum pinned to the bracket: widen that side by a decade and retry.
        if at_low:
            lo -= math.log(10.0)
        if at_high:
            hi += math.log(10.0)
        logger.debug(f"MLE bracket expanded to [{math.exp(lo):.3g}, {math.exp(hi):.3g}]")

    theta1 = math.exp(s_hat)
    theta2 = math.exp(math.log(m) - _log_neg_sum_log1m(log_x, theta1))
    gradient_norm = float(np.linalg.norm(_score_from_logs(theta1, theta2, log_x)))
    converged = success and math.isfinite(theta2) and gradient_norm / m < gradient_tol
    return ArrayFit(theta1, theta2, converged, gradient_norm, evaluations)


def observed_information(params: KumaParams, sample: PhaseISample) -> np.ndarray:
    """Negative Hessian of l by central differences of the score, step max(1e-4*|theta|, 1e-6)."""
    log_x = np.log(_values(sample))
    theta = np.array([params.theta1, params.theta2])
    steps = np.maximum(1e-4 * np.abs(theta), 1e-6)
    hessian = np.empty((2, 2))
    for j in range(2):
        forward, backward = theta.copy(), theta.copy()
        forward[j] += steps[j]
        backward[j] -= steps[j]
        hessian[:, j] = (_score_from_logs(*forward, log_x) - _score_from_logs(*backward, log_x)) / (2.0 * steps[j])
    hessian = 0.5 * (hessian + hessian.T)
    return -hessian


def fit_mle(sample: PhaseISample) -> FitResult:
    """MLE of (theta1, theta2) with standard errors from the inverse observed information."""
    fit = fit_values(np.asarray(sample.values, dtype=float))
    params_hat = KumaParams(theta1=fit.theta1, theta2=fit.theta2)

    info = observed_information(params_hat, sample)
    if np.all(np.linalg.eigvalsh(info) > 0):
        std_errors = np.sqrt(np.diag(np.linalg.inv(info)))
    else:
        logger.warning(f"Observed information at {params_hat} is not positive definite; standard errors unavailable.")
        std_errors = np.array([math.nan, math.nan])

    if not fit.converged:
        logger.warning(f"MLE did not converge for m={sample.m}: best iterate {params_hat}, |score|={fit.gradient_norm:.3g}")

    return FitResult(
        params_hat=params_hat,
        std_errors=(float(std_errors[0]), float(std_errors[1])),
        loglik=log_likelihood(params_hat, sample),
        converged=fit.converged,
        gradient_norm=fit.gradient_norm,
        iterations=fit.evaluations,
    )
