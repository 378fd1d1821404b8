"""Two-sided Shewhart chart for individual Kumaraswamy observations.

A point Y_t signals when Y_t is outside the closed interval [LCL, UCL]; a value equal to
a limit is in control.
"""
import logging
import math
from typing import Sequence, Tuple, Union

import numpy as np

from src.app.core.config import settings
from src.app.core.exceptions import ArlOverflowError, DomainError
from src.app.lib import kuma_dist
from src.app.schemas.chart import ChartPoint, ChartRun, ControlLimits
from src.app.schemas.distribution import KumaParams, ShiftSpec
from src.app.schemas.status import CenterLineMode, LimitSource, PointStatus

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"false alarm rate must lie in (0, 1), got {alpha}")


def center_line(params: KumaParams, mode: Union[CenterLineMode, str, None] = None) -> float:
    """Median (default, suited to skewed laws) or mean of the in-control distribution."""
    mode = CenterLineMode(mode or settings.CENTER_LINE_MODE)
    if mode == CenterLineMode.MEAN:
        return kuma_dist.mean(params)
    return kuma_dist.median(params)


def _equal_tail_limits(params: KumaParams, alpha: float, source: LimitSource,
                       mode: Union[CenterLineMode, str, None]) -> ControlLimits:
    _check_alpha(alpha)
    lcl = float(kuma_dist.quantile(alpha / 2.0, params))
    ucl = float(kuma_dist.quantile(1.0 - alpha / 2.0, params))
    try:
        return ControlLimits(lcl=lcl, ucl=ucl, cl=center_line(params, mode), far=alpha, source=source)
    except ValueError as e:
        raise DomainError(f"cannot build limits for {params} at alpha={alpha}: {e}") from e


def limits_known(params0: KumaParams, alpha: float,
                 mode: Union[CenterLineMode, str, None] = None) -> ControlLimits:
    """Case K limits: the alpha/2 and 1 - alpha/2 quantiles of the in-control law."""
    return _equal_tail_limits(params0, alpha, LimitSource.KNOWN, mode)


def limits_plugin(params_hat: KumaParams, alpha: float,
                  source: LimitSource = LimitSource.PLUGIN,
                  mode: Union[CenterLineMode, str, None] = None) -> ControlLimits:
    """Case U limits: same formula with the estimates substituted. `source` tags adjusted FARs."""
    if source == LimitSource.KNOWN:
        raise DomainError("plug-in limits cannot be tagged as known-parameter limits")
    return _equal_tail_limits(params_hat, alpha, source, mode)


def signal_probability(lcl: Union[float, np.ndarray], ucl: Union[float, np.ndarray],
                       params: KumaParams) -> Union[float, np.ndarray]:
    """P(Y < lcl) + P(Y > ucl) under `params`; vectorized over arrays of limits."""
    lower = kuma_dist.cdf_from_shapes(lcl, params.theta1, params.theta2)
    upper = kuma_dist.survival_from_shapes(ucl, params.theta1, params.theta2)
    total = lower + upper
    return float(total) if np.ndim(total) == 0 else total


def false_alarm_prob(limits: ControlLimits, params0: KumaParams) -> float:
    """1 - F(UCL; theta0) + F(LCL; theta0): the actual FAR of a given pair of limits."""
    return float(signal_probability(limits.lcl, limits.ucl, params0))


def conditional_arl(limits: ControlLimits, params: KumaParams) -> float:
    """Mean of the geometric run length given the limits: 1 / signal probability."""
    q = false_alarm_prob(limits, params)
    if q <= 0.0:
        raise ArlOverflowError(f"signal probability underflows to 0 for limits ({limits.lcl}, {limits.ucl}) under {params}")
    return 1.0 / q


def run_length_sd(limits: ControlLimits, params: KumaParams) -> float:
    """Standard deviation of the geometric run length: sqrt(1 - q) / q."""
    q = false_alarm_prob(limits, params)
    if q <= 0.0:
        raise ArlOverflowError(f"signal probability underflows to 0 for limits ({limits.lcl}, {limits.ucl}) under {params}")
    return math.sqrt(1.0 - q) / q


def plugin_limit_arrays(theta1_hat: np.ndarray, theta2_hat: np.ndarray,
                        alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Plug-in (LCL, UCL) for many estimate pairs at once."""
    _check_alpha(alpha)
    lcl = kuma_dist.quantile_from_shapes(alpha / 2.0, theta1_hat, theta2_hat)
    ucl = kuma_dist.quantile_from_shapes(1.0 - alpha / 2.0, theta1_hat, theta2_hat)
    return lcl, ucl


def conditional_arl_array(theta1_hat: np.ndarray, theta2_hat: np.ndarray, alpha: float,
                          params: KumaParams) -> np.ndarray:
    """CARL of each estimate pair's plug-in limits evaluated under `params`."""
    lcl, ucl = plugin_limit_arrays(theta1_hat, theta2_hat, alpha)
    q = np.asarray(signal_probability(lcl, ucl, params))
    if np.any(q <= 0.0):
        raise ArlOverflowError(f"signal probability underflows to 0 for {int(np.sum(q <= 0.0))} replication(s) under {params}")
    return 1.0 / q


def apply_shift(params0: KumaParams, shift: ShiftSpec) -> KumaParams:
    return KumaParams(theta1=shift.delta1 * params0.theta1, theta2=shift.delta2 * params0.theta2)


def point_status(value: float, limits: ControlLimits) -> PointStatus:
    if value > limits.ucl:
        return PointStatus.ABOVE_UCL
    if value < limits.lcl:
        return PointStatus.BELOW_LCL
    return PointStatus.IN


def run_chart(data: Sequence[float], limits: ControlLimits, start_index: int = 1) -> ChartRun:
    """Classify each observation and collect the 1-based indices that signal."""
    values = np.asarray(data, dtype=float)
    if values.size:
        kuma_dist.check_unit_interval(values, "chart data")
    points = []
    signals = []
    for offset, value in enumerate(values.tolist()):
        index = start_index + offset
        status = point_status(value, limits)
        points.append(ChartPoint(index=index, value=value, status=status))
        if status != PointStatus.IN:
            signals.append(index)
    if signals:
        logger.info(f"{limits.source.value} limits: {len(signals)} signal(s) at {signals}")
    return ChartRun(limits=limits, points=points, signal_indices=signals)


DEFAULT_DELTAS: Tuple[float, ...] = tuple(round(0.5 + 0.1 * k, 10) for k in range(16))


def shift_grid(delta1: Sequence[float] = (1.0,), delta2: Sequence[float] = (1.0,),
               allow_simultaneous: bool = False) -> list[ShiftSpec]:
    """Cartesian grid of shifts; without `allow_simultaneous` only one factor may move away from 1."""
    grid = []
    for d1 in delta1:
        for d2 in delta2:
            if not allow_simultaneous and d1 != 1.0 and d2 != 1.0:
                continue
            shift = ShiftSpec(delta1=d1, delta2=d2)
            if shift not in grid:
                grid.append(shift)
    if not grid:
        raise DomainError("shift grid is empty; vary one factor at a time or allow simultaneous shifts")
    return grid
