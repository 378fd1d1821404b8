"""Closed-form Kumaraswamy distribution on (0,1).

Every function accepts a scalar or a numpy array for its first argument and returns
a float or an array of the same shape. The `*_from_shapes` variants also broadcast
over arrays of shape parameters; the Monte Carlo engine uses them to evaluate all
replications at once.
"""
import logging
from typing import Tuple, Union

import numpy as np
from scipy import special

from src.app.core.exceptions import DomainError
from src.app.schemas.distribution import KumaParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_TINY = np.finfo(float).tiny
_BELOW_ONE = np.nextafter(1.0, 0.0)


def check_unit_interval(x: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    # NaN fails both comparisons and is rejected with the rest.
    inside = (arr > 0.0) & (arr < 1.0)
    if not np.all(inside):
        bad = np.ravel(arr)[~np.ravel(inside)]
        raise DomainError(f"{name} must lie in the open interval (0, 1), got {bad[:5].tolist()}")
    return arr


def _as_output(arr: np.ndarray) -> ArrayLike:
    return float(arr) if np.ndim(arr) == 0 else arr


# --- Unchecked kernels, broadcasting over shape arrays ---

def log_survival_from_shapes(y: ArrayLike, theta1: ArrayLike, theta2: ArrayLike) -> np.ndarray:
    """ln(1 - F(y)) = theta2 * log1p(-y**theta1)."""
    return np.asarray(theta2) * np.log1p(-np.power(y, theta1))


def cdf_from_shapes(y: ArrayLike, theta1: ArrayLike, theta2: ArrayLike) -> np.ndarray:
    return -np.expm1(log_survival_from_shapes(y, theta1, theta2))


def survival_from_shapes(y: ArrayLike, theta1: ArrayLike, theta2: ArrayLike) -> np.ndarray:
    return np.exp(log_survival_from_shapes(y, theta1, theta2))


def quantile_from_shapes(u: ArrayLike, theta1: ArrayLike, theta2: ArrayLike) -> np.ndarray:
    """[1 - (1-u)^(1/theta2)]^(1/theta1), with (1-u)^(1/theta2) taken as exp(log1p(-u)/theta2)."""
    inner = -np.expm1(np.log1p(-np.asarray(u, dtype=float)) / np.asarray(theta2))
    return np.power(inner, 1.0 / np.asarray(theta1))


# --- Public operations ---

def logpdf(y: ArrayLike, params: KumaParams) -> ArrayLike:
    arr = check_unit_interval(y, "y")
    t1, t2 = params.theta1, params.theta2
    out = (np.log(t1) + np.log(t2) + (t1 - 1.0) * np.log(arr)
           + (t2 - 1.0) * np.log1p(-np.power(arr, t1)))
    return _as_output(out)


def pdf(y: ArrayLike, params: KumaParams) -> ArrayLike:
    """theta1*theta2 * y^(theta1-1) * (1-y^theta1)^(theta2-1) for y in (0,1)."""
    return _as_output(np.exp(np.asarray(logpdf(y, params))))


def cdf(y: ArrayLike, params: KumaParams) -> ArrayLike:
    """1 - (1-y^theta1)^theta2 for y in (0,1)."""
    arr = check_unit_interval(y, "y")
    return _as_output(cdf_from_shapes(arr, params.theta1, params.theta2))


def survival(y: ArrayLike, params: KumaParams) -> ArrayLike:
    """1 - cdf(y), computed directly so the upper tail keeps its relative accuracy."""
    arr = check_unit_interval(y, "y")
    return _as_output(survival_from_shapes(arr, params.theta1, params.theta2))


def quantile(u: ArrayLike, params: KumaParams) -> ArrayLike:
    arr = check_unit_interval(u, "u")
    return _as_output(quantile_from_shapes(arr, params.theta1, params.theta2))


def median(params: KumaParams) -> float:
    return float(quantile(0.5, params))


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) = lnG(a) + lnG(b) - lnG(a+b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"log_beta needs positive arguments, got ({a}, {b})")
    return float(special.betaln(a, b))


def mean(params: KumaParams) -> float:
    """theta2 * B(1 + 1/theta1, theta2)."""
    t1, t2 = params.theta1, params.theta2
    return float(t2 * np.exp(log_beta(1.0 + 1.0 / t1, t2)))


def variance(params: KumaParams) -> float:
    t1, t2 = params.theta1, params.theta2
    second_moment = t2 * np.exp(log_beta(1.0 + 2.0 / t1, t2))
    return float(second_moment - mean(params) ** 2)


def sample(params: KumaParams, n: int, stream: np.random.Generator) -> np.ndarray:
    """Inverse-transform draws quantile(U), U ~ Uniform(0,1), from `stream`."""
    if n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n}")
    u = stream.random(n)
    # Generator.random is on [0, 1); 0 would map to the closed boundary.
    u[u == 0.0] = _TINY
    draws = quantile_from_shapes(u, params.theta1, params.theta2)
    return np.clip(draws, _TINY, _BELOW_ONE)


def density_curve(params: KumaParams, points: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    """Grid of `points` interior abscissae with their density values, for plot export."""
    if points < 2:
        raise DomainError(f"density_curve needs at least 2 points, got {points}")
    grid = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return grid, np.asarray(pdf(grid, params))
