import logging
import math
import time
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.app.core.config import settings
from src.app.core.exceptions import DegenerateSampleError, DomainError, StudyFailureError
from src.app.lib import chart, kuma_dist
from src.app.lib.mle_fit import fit_values
from src.app.lib.rng import replication_stream
from src.app.schemas.distribution import IN_CONTROL, KumaParams, ShiftSpec
from src.app.schemas.fit import records_from_columns
from src.app.schemas.study import (
    PERCENTILE_LEVELS,
    CarlSample,
    CarlSummary,
    LimitRule,
    OocPoint,
    StudyConfig,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitCache:
    """Fitted estimates of N simulated Phase I samples; independent of any FAR."""
    params0: KumaParams
    m: int
    seed: int
    theta1: np.ndarray
    theta2: np.ndarray
    converged: np.ndarray

    @property
    def replications(self) -> int:
        return int(self.theta1.size)

    @property
    def n_failed(self) -> int:
        return int(np.count_nonzero(~self.converged))

    @property
    def failure_rate(self) -> float:
        return self.n_failed / self.replications


def _fit_replications(theta1: float, theta2: float, m: int, seed: int,
                      start: int, stop: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Steps 1-2 for replications [start, stop): simulate a Phase I sample and fit it."""
    params0 = KumaParams(theta1=theta1, theta2=theta2)
    size = stop - start
    t1 = np.full(size, math.nan)
    t2 = np.full(size, math.nan)
    ok = np.zeros(size, dtype=bool)
    for i, r in enumerate(range(start, stop)):
        x = kuma_dist.sample(params0, m, replication_stream(seed, r))
        try:
            fit = fit_values(x)
        except DegenerateSampleError:
            continue
        t1[i], t2[i], ok[i] = fit.theta1, fit.theta2, fit.converged
    return t1, t2, ok


def summarize_values(values: np.ndarray, reference_arl: float, threshold: float,
                     n_failed: int = 0) -> CarlSummary:
    """AARL, SDARL (divisor n-1), fraction strictly below `threshold`, linear-interpolation percentiles."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise DomainError("cannot summarize an empty conditional ARL sample")
    if not threshold > 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    levels = np.array(PERCENTILE_LEVELS)
    quantiles = np.quantile(values, levels, method='linear')
    return CarlSummary(
        aarl=float(np.mean(values)),
        sdarl=float(np.std(values, ddof=1)) if n > 1 else 0.0,
        sdarl_defined=n > 1,
        perc=float(np.count_nonzero(values < threshold)) / n,
        percentiles={float(lvl): float(q) for lvl, q in zip(PERCENTILE_LEVELS, quantiles)},
        reference_arl=reference_arl,
        threshold=threshold,
        n_effective=n,
        n_failed=n_failed,
    )


def summarize(sample: CarlSample, reference_arl: float, threshold: float) -> CarlSummary:
    return summarize_values(sample.effective_values(), reference_arl, threshold, n_failed=sample.n_failed)


class MonteCarloEvaluator:
    """
    Simulates the conditional ARL distribution of plug-in limits.

    Fitted estimates are memoized per (params0, m, N, seed), so evaluating another FAR,
    another shift or another limit rule reuses the same Phase I samples.
    """

    def __init__(self, workers: Optional[int] = None, chunk_size: Optional[int] = None,
                 max_failure_rate: Optional[float] = None):
        self.workers = max(1, workers if workers is not None else settings.WORKERS)
        self.chunk_size = max(1, chunk_size if chunk_size is not None else settings.CHUNK_SIZE)
        self.max_failure_rate = settings.MAX_FIT_FAILURE_RATE if max_failure_rate is None else max_failure_rate
        self._fit_cache: Dict[Tuple[KumaParams, int, int, int], FitCache] = {}
        logger.info(f"MonteCarloEvaluator initialized with {self.workers} worker(s).")

    def simulate_fits(self, params0: KumaParams, m: int, replications: int, seed: int) -> FitCache:
        """
        Steps 1-2 of the study for every replication, or the cached result of an earlier call.

        Raises:
            StudyFailureError: if more than `max_failure_rate` of the fits fail.
        """
        key = (params0, m, replications, seed)
        cached = self._fit_cache.get(key)
        if cached is not None:
            logger.debug(f"Reusing {replications} cached fits for {params0}, m={m}, seed={seed}")
            return cached

        start_time = time.time()
        bounds = [(s, min(s + self.chunk_size, replications)) for s in range(0, replications, self.chunk_size)]
        tasks = [(params0.theta1, params0.theta2, m, seed, lo, hi) for lo, hi in bounds]
        if self.workers > 1 and len(tasks) > 1:
            with Pool(processes=self.workers) as pool:
                parts = pool.starmap(_fit_replications, tasks)
        else:
            parts = [_fit_replications(*task) for task in tasks]

        cache = FitCache(
            params0=params0, m=m, seed=seed,
            theta1=np.concatenate([p[0] for p in parts]),
            theta2=np.concatenate([p[1] for p in parts]),
            converged=np.concatenate([p[2] for p in parts]),
        )

        study_details = {
            "params0": str(params0), "m": m, "replications": replications, "seed": seed,
            "workers": self.workers, "failed_fits": cache.n_failed,
            "elapsed_s": round(time.time() - start_time, 2),
        }
        logger.info(f"Phase I fits completed: {study_details}")

        if cache.n_failed:
            logger.warning(f"{cache.n_failed} of {replications} fits failed and are excluded from summaries.")
        if cache.failure_rate > self.max_failure_rate:
            logger.error(f"Fit failure rate {cache.failure_rate:.2%} exceeds {self.max_failure_rate:.2%}; aborting study.")
            raise StudyFailureError(
                f"{cache.n_failed} of {replications} fits failed ({cache.failure_rate:.2%} > {self.max_failure_rate:.2%})")

        self._fit_cache[key] = cache
        return cache

    @staticmethod
    def carl_values(fits: FitCache, alpha: float, shift: ShiftSpec = IN_CONTROL) -> np.ndarray:
        """Steps 3-4: CARL of every replication (NaN where the fit failed)."""
        target = chart.apply_shift(fits.params0, shift)
        values = np.full(fits.replications, math.nan)
        ok = fits.converged
        values[ok] = chart.conditional_arl_array(fits.theta1[ok], fits.theta2[ok], alpha, target)
        return values

    def simulate_carl(self, config: StudyConfig) -> CarlSample:
        fits = self.simulate_fits(config.params0, config.m, config.replications, config.seed)
        values = self.carl_values(fits, config.alpha, config.shift)
        return CarlSample(
            carl_values=[None if math.isnan(v) else v for v in values.tolist()],
            fit_records=records_from_columns(fits.theta1.tolist(), fits.theta2.tolist(), fits.converged.tolist()),
        )

    def summarize_at(self, fits: FitCache, alpha: float, reference_arl: float, threshold: float,
                     shift: ShiftSpec = IN_CONTROL) -> Tuple[CarlSummary, np.ndarray]:
        values = self.carl_values(fits, alpha, shift)
        effective = values[~np.isnan(values)]
        return summarize_values(effective, reference_arl, threshold, n_failed=fits.n_failed), values

    def ooc_study(self, params0: KumaParams, m: int,
                  limit_rules: Union[LimitRule, Sequence[LimitRule]],
                  shift_grid: Sequence[ShiftSpec], replications: int, seed: int,
                  nominal_alpha: Optional[float] = None,
                  keep_samples: bool = False) -> Dict[ShiftSpec, OocPoint]:
        """
        Conditional ARL under each shift for every limit rule, from one set of fits.

        Args:
            limit_rules: One rule or several (e.g. plug-in, adj-A, adj-B).
            shift_grid: Shifts to evaluate; (1, 1) reproduces the in-control study.
            nominal_alpha: FAR of the Case K reference limits and of ARL0; defaults to the first rule's.
            keep_samples: Attach the raw per-replication CARL values (boxplot data).

        Returns:
            Mapping from shift to its OocPoint, in grid order.
        """
        rules: List[LimitRule] = [limit_rules] if isinstance(limit_rules, LimitRule) else list(limit_rules)
        if not rules:
            raise DomainError("ooc_study needs at least one limit rule")
        nominal_alpha = nominal_alpha if nominal_alpha is not None else rules[0].alpha
        reference_arl = 1.0 / nominal_alpha
        known_limits = chart.limits_known(params0, nominal_alpha)

        start_time = time.time()
        fits = self.simulate_fits(params0, m, replications, seed)
        results: Dict[ShiftSpec, OocPoint] = {}
        for shift in shift_grid:
            target = chart.apply_shift(params0, shift)
            summaries: Dict[str, CarlSummary] = {}
            samples: Dict[str, List[Optional[float]]] = {}
            for rule in rules:
                summary, values = self.summarize_at(fits, rule.alpha, reference_arl, reference_arl, shift)
                summaries[rule.name] = summary
                if keep_samples:
                    samples[rule.name] = [None if math.isnan(v) else v for v in values.tolist()]
            results[shift] = OocPoint(
                shift=shift,
                case_k_arl=chart.conditional_arl(known_limits, target),
                case_k_sdrl=chart.run_length_sd(known_limits, target),
                summaries=summaries,
                samples=samples if keep_samples else None,
            )

        logger.info(f"OOC study finished: {len(results)} shift(s) x {len(rules)} rule(s) in {time.time() - start_time:.2f}s")
        return results
