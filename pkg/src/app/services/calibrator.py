import logging
import math
import time
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

from src.app.core.exceptions import CalibrationInfeasibleError, DomainError, MonotonicityError
from src.app.schemas.calibration import AdjustmentRequest, AdjustmentResult
from src.app.schemas.status import AdjustmentMethod
from src.app.schemas.study import CarlSummary
from src.app.services.mc_evaluator import FitCache, MonteCarloEvaluator

logger = logging.getLogger(__name__)

# Relative slack when comparing criteria of neighbouring grid points.
_MONOTONE_RTOL = 1e-12


class GridEvaluation(NamedTuple):
    alpha: float
    summary: CarlSummary
    aarl: float
    exceedance: float


class _SearchState:
    """Grid of candidate FARs anchored at the nominal one, with memoized evaluations."""

    def __init__(self, evaluator: MonteCarloEvaluator, fits: FitCache, request: AdjustmentRequest):
        self.evaluator = evaluator
        self.fits = fits
        self.request = request
        step = request.grid_step
        # alpha_k = alpha_nominal + k * step must stay inside (0, 1).
        self.k_min = math.floor(-request.alpha_nominal / step) + 1
        self.k_max = math.ceil((1.0 - request.alpha_nominal) / step) - 1
        while self.alpha_at(self.k_min) <= 0.0:
            self.k_min += 1
        while self.alpha_at(self.k_max) >= 1.0:
            self.k_max -= 1
        self.evaluations: Dict[int, GridEvaluation] = {}

    def alpha_at(self, k: int) -> float:
        return round(self.request.alpha_nominal + k * self.request.grid_step, 12)

    def evaluate(self, k: int) -> GridEvaluation:
        cached = self.evaluations.get(k)
        if cached is not None:
            return cached
        alpha = self.alpha_at(k)
        summary, _ = self.evaluator.summarize_at(self.fits, alpha, self.request.reference_arl, self.request.threshold)
        evaluation = GridEvaluation(alpha, summary, summary.aarl, summary.perc)
        self.evaluations[k] = evaluation
        logger.debug(f"alpha={alpha:.5f}: AARL={summary.aarl:.2f}, exceedance={summary.perc:.4f}")
        self._check_monotone()
        return evaluation

    def trace(self) -> List[GridEvaluation]:
        return [self.evaluations[k] for k in sorted(self.evaluations)]

    def _check_monotone(self) -> None:
        trace = self.trace()
        for left, right in zip(trace, trace[1:]):
            if right.aarl > left.aarl * (1.0 + _MONOTONE_RTOL):
                raise MonotonicityError(
                    f"AARL increased from {left.aarl} at alpha={left.alpha} to {right.aarl} at alpha={right.alpha}")
            if right.exceedance < left.exceedance:
                raise MonotonicityError(
                    f"exceedance fraction decreased from {left.exceedance} at alpha={left.alpha} "
                    f"to {right.exceedance} at alpha={right.alpha}")


def _walk_to_boundary(predicate: Callable[[int], bool], start: int, direction: int,
                      limit: int) -> Tuple[int, Optional[int]]:
    """
    Find where a monotone predicate over grid indices flips.

    `predicate(start)` must hold. Strides of 1, 2, 4, ... are taken from `start` in `direction`
    until the predicate fails or `limit` is reached, then the gap is bisected.

    Returns:
        (last index where the predicate holds, first index where it fails or None if it
        holds all the way to `limit`).
    """
    good = start
    stride = 1
    bad: Optional[int] = None
    while bad is None:
        k = good + direction * stride
        if direction * (k - limit) > 0:
            k = limit
        if k == good:
            return good, None
        if predicate(k):
            good = k
            stride *= 2
        else:
            bad = k
    while abs(bad - good) > 1:
        mid = (good + bad) // 2
        if predicate(mid):
            good = mid
        else:
            bad = mid
    return good, bad


class CalibratorService:
    """Searches adjusted FARs for plug-in limits under common random numbers."""

    def __init__(self, evaluator: Optional[MonteCarloEvaluator] = None):
        self.evaluator = evaluator or MonteCarloEvaluator()

    def calibrate(self, request: AdjustmentRequest) -> AdjustmentResult:
        if request.method == AdjustmentMethod.A:
            return self.adjust_a(request)
        return self.adjust_b(request)

    def _prepare(self, request: AdjustmentRequest, expected: AdjustmentMethod) -> _SearchState:
        if request.method != expected:
            raise DomainError(f"adjustment {expected.value} cannot run a method-{request.method.value} request")
        logger.info(f"Calibrating method {request.method.value} for {request.params0}, m={request.m}, "
                    f"alpha={request.alpha_nominal}, p={request.p}, epsilon={request.epsilon}, N={request.replications}")
        fits = self.evaluator.simulate_fits(request.params0, request.m, request.replications, request.seed)
        return _SearchState(self.evaluator, fits, request)

    def _result(self, state: _SearchState, k: int, boundary: Optional[int], criterion: Callable[[GridEvaluation], float],
                start_time: float) -> AdjustmentResult:
        chosen = state.evaluate(k)
        boundary_eval = state.evaluate(boundary) if boundary is not None else None
        result = AdjustmentResult(
            method=state.request.method,
            alpha_adjusted=chosen.alpha,
            summary=chosen.summary,
            criterion_value=criterion(chosen),
            iterations=len(state.evaluations),
            reference_arl=state.request.reference_arl,
            threshold=state.request.threshold,
            boundary_alpha=boundary_eval.alpha if boundary_eval else None,
            boundary_criterion=criterion(boundary_eval) if boundary_eval else None,
        )
        logger.info(f"Adjusted FAR {result.alpha_adjusted:.5f} (criterion {result.criterion_value:.4f}) "
                    f"after {result.iterations} grid evaluations in {time.time() - start_time:.2f}s")
        return result

    def adjust_a(self, request: AdjustmentRequest) -> AdjustmentResult:
        """
        Grid FAR nearest the nominal one with |AARL - ARL0| / ARL0 < p.

        AARL is non-increasing in the FAR, so the feasible FARs form one contiguous run of
        grid points; the search walks from the nominal FAR towards that run.

        Raises:
            CalibrationInfeasibleError: if the band is empty on the grid.
        """
        start_time = time.time()
        state = self._prepare(request, AdjustmentMethod.A)
        arl0 = request.reference_arl

        def gap(e: GridEvaluation) -> float:
            return abs(e.aarl - arl0) / arl0

        def below_upper(k: int) -> bool:
            return state.evaluate(k).aarl < arl0 * (1.0 + request.p)

        def above_lower(k: int) -> bool:
            return state.evaluate(k).aarl > arl0 * (1.0 - request.p)

        if below_upper(0) and above_lower(0):
            return self._result(state, 0, None, gap, start_time)

        if not below_upper(0):
            # AARL too large: raise the FAR until AARL drops under the upper edge.
            last_out, first_ok = _walk_to_boundary(lambda k: not below_upper(k), 0, +1, state.k_max)
        else:
            last_out, first_ok = _walk_to_boundary(lambda k: not above_lower(k), 0, -1, state.k_min)

        if first_ok is None or not (below_upper(first_ok) and above_lower(first_ok)):
            raise CalibrationInfeasibleError(
                f"no FAR on the {request.grid_step:g} grid brings AARL within {request.p:.0%} of ARL0={arl0:.2f}")
        return self._result(state, first_ok, last_out, gap, start_time)

    def adjust_b(self, request: AdjustmentRequest) -> AdjustmentResult:
        """
        Largest grid FAR whose fraction of CARL values below ARL0/(1+epsilon) is < p.

        The fraction is non-decreasing in the FAR, so the feasible FARs are a prefix of the grid.

        Raises:
            CalibrationInfeasibleError: if even the smallest grid FAR violates the criterion.
        """
        start_time = time.time()
        state = self._prepare(request, AdjustmentMethod.B)

        def exceedance(e: GridEvaluation) -> float:
            return e.exceedance

        def feasible(k: int) -> bool:
            return state.evaluate(k).exceedance < request.p

        if feasible(0):
            best, boundary = _walk_to_boundary(feasible, 0, +1, state.k_max)
        else:
            boundary, best_or_none = _walk_to_boundary(lambda k: not feasible(k), 0, -1, state.k_min)
            if best_or_none is None:
                raise CalibrationInfeasibleError(
                    f"exceedance fraction stays >= {request.p} down to alpha={state.alpha_at(state.k_min):g}")
            best = best_or_none
        return self._result(state, best, boundary, exceedance, start_time)
