import logging
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, cast

import pandas as pd

from src.app.core.exceptions import DomainError
from src.app.lib import chart
from src.app.lib.data_files import read_data_file
from src.app.lib.mle_fit import fit_mle
from src.app.schemas.calibration import AdjustmentRequest, AdjustmentResult
from src.app.schemas.chart import ChartRun, ControlLimits
from src.app.schemas.command import CommandDefinition, CommandInputSchema, CommandOption
from src.app.schemas.distribution import KumaParams
from src.app.schemas.fit import FitResult, PhaseISample
from src.app.schemas.report import ReportRecord
from src.app.schemas.status import AdjustmentMethod, CenterLineMode, LimitSource
from src.app.services.calibrator import CalibratorService
from src.app.services.commands.base_command import (
    CALIBRATION_OPTIONS,
    PARAM_OPTIONS,
    STUDY_OPTIONS,
    BaseCommand,
    resolve_params,
    resolve_seed,
    validated,
)

logger = logging.getLogger(__name__)

CENTER_LINE_OPTION = {
    "center_line": CommandOption(type="string", enum=[m.value for m in CenterLineMode],
                                 description="Center line: median (default) or mean."),
}


class LimitVariant(NamedTuple):
    """A named pair of plug-in limits: plain, or at a FAR adjusted by one of the two methods."""
    source: LimitSource
    method: Optional[AdjustmentMethod]
    epsilon: Optional[float]
    p: Optional[float]

    def criterion(self, params: Dict[str, Any]) -> Tuple[float, float]:
        """(p, epsilon) of the calibration; unset fields fall back to the --p and --epsilon flags."""
        p = self.p if self.p is not None else params["p"]
        epsilon = self.epsilon if self.epsilon is not None else (params.get("epsilon") or 0.0)
        return p, epsilon


VARIANTS: Dict[str, LimitVariant] = {
    "plugin": LimitVariant(LimitSource.PLUGIN, None, 0.0, None),
    "a": LimitVariant(LimitSource.ADJUSTED_A, AdjustmentMethod.A, 0.0, None),
    "b": LimitVariant(LimitSource.ADJUSTED_B, AdjustmentMethod.B, None, None),
    "b20": LimitVariant(LimitSource.ADJUSTED_B, AdjustmentMethod.B, 0.20, 0.10),
}

FAR_OPTIONS: Dict[str, CommandOption] = {
    f"far_{name}": CommandOption(type="number", description=f"Known adjusted FAR for {name}; skips its calibration.")
    for name, variant in VARIANTS.items() if variant.method is not None
}


def fit_data_file(path: str) -> Tuple[PhaseISample, FitResult]:
    data = read_data_file(path)
    sample = validated(PhaseISample, values=data.values)
    return sample, fit_mle(sample)


def calibrate_far(calibrator: CalibratorService, method: AdjustmentMethod, params0: KumaParams, m: int,
                  params: Dict[str, Any], seed: int, p: float, epsilon: float) -> AdjustmentResult:
    request = validated(
        AdjustmentRequest,
        method=method, params0=params0, m=m, alpha_nominal=params["alpha"], p=p, epsilon=epsilon,
        replications=params["reps"], seed=seed, grid_step=params["grid_step"],
    )
    return calibrator.calibrate(request)


# --- LimitsCommand ---

LIMITS_COMMAND_DEFINITION = CommandDefinition(
    name="limits",
    description="Control limits from known parameters, or from the fit of a data file, optionally at an adjusted FAR.",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            "data": CommandOption(type="string", description="Phase I data file to fit instead of --theta1/--theta2."),
            **STUDY_OPTIONS,
            "adjust": CommandOption(type="string", enum=["none", "a", "b"], default="none",
                                    description="FAR adjustment applied before computing the limits."),
            "far": CommandOption(type="number", description="Already known adjusted FAR; skips the calibration."),
            **CALIBRATION_OPTIONS,
            **CENTER_LINE_OPTION,
            "out": CommandOption(type="string", description="Optional JSON report path."),
        },
    ),
)


class LimitsCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(LIMITS_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        fit: Optional[FitResult] = None
        m = params.get("m")
        if params.get("data"):
            sample, fit = fit_data_file(params["data"])
            params0 = fit.params_hat
            m = m or sample.m
        else:
            params0 = resolve_params(params)

        mode = params.get("center_line")
        seed: Optional[int] = None
        generated = False
        calibration: Optional[AdjustmentResult] = None
        if params["adjust"] == "none":
            if fit is None:
                limits = chart.limits_known(params0, params["alpha"], mode)
            else:
                limits = chart.limits_plugin(params0, params["alpha"], mode=mode)
        else:
            variant = VARIANTS[params["adjust"]]
            far = params.get("far")
            if far is None:
                if m is None:
                    raise DomainError("--m (or --data) is required to calibrate the FAR")
                seed, generated = resolve_seed(params)
                calibration = calibrate_far(CalibratorService(self.evaluator), cast(AdjustmentMethod, variant.method),
                                            params0, m, params, seed, *variant.criterion(params))
                far = calibration.alpha_adjusted
            limits = chart.limits_plugin(params0, far, source=variant.source, mode=mode)

        record = ReportRecord(
            command="limits", scenario=params0, m=m, alpha=params["alpha"], seed=seed, fit=fit,
            limits=[limits], calibration=calibration,
            extras={"seed_generated": generated, "adjust": params["adjust"]},
        )
        if params.get("out"):
            self.repository.save_record(record, params["out"])
        return record


# --- ChartCommand ---

CHART_COMMAND_DEFINITION = CommandDefinition(
    name="chart",
    description="Fit Phase I data, compute plug-in and adjusted limits, and flag signals in Phase I and Phase II.",
    input_schema=CommandInputSchema(
        options={
            "phase1": CommandOption(type="string", description="Phase I data file."),
            "phase2": CommandOption(type="string", description="Optional Phase II data file."),
            "alpha": STUDY_OPTIONS["alpha"],
            "variants": CommandOption(type="string-list", enum=list(VARIANTS), default=list(VARIANTS),
                                      description="Limit pairs to compute."),
            **FAR_OPTIONS,
            "reps": STUDY_OPTIONS["reps"],
            "seed": STUDY_OPTIONS["seed"],
            "p": CALIBRATION_OPTIONS["p"],
            "grid_step": CALIBRATION_OPTIONS["grid_step"],
            **CENTER_LINE_OPTION,
            "out": CommandOption(type="string", description="JSON report path; plot tables go next to it."),
        },
        required=["phase1", "out"],
    ),
)


def plot_frame(runs: Dict[str, ChartRun]) -> pd.DataFrame:
    rows = []
    for phase, run in runs.items():
        for point in run.points:
            rows.append({"phase": phase, "index": point.index, "value": point.value, "lcl": run.limits.lcl,
                         "cl": run.limits.cl, "ucl": run.limits.ucl, "status": point.status.value})
    return pd.DataFrame(rows, columns=["phase", "index", "value", "lcl", "cl", "ucl", "status"])


class ChartCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(CHART_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        sample, fit = fit_data_file(params["phase1"])
        phases: Dict[str, Tuple[float, ...]] = {"phase1": sample.values}
        if params.get("phase2"):
            phases["phase2"] = read_data_file(params["phase2"]).values

        params_hat = fit.params_hat
        mode = params.get("center_line")
        seed: Optional[int] = None
        generated = False
        calibrator: Optional[CalibratorService] = None
        calibrations: Dict[str, Any] = {}
        limits_list: List[ControlLimits] = []
        signals: Dict[str, Dict[str, List[int]]] = {}
        plot_files: Dict[str, str] = {}
        out = Path(params["out"])

        for name in params["variants"]:
            variant = VARIANTS[name]
            far = params["alpha"] if variant.method is None else params.get(f"far_{name}")
            if far is None:
                if seed is None:
                    seed, generated = resolve_seed(params)
                calibrator = calibrator or CalibratorService(self.evaluator)
                result = calibrate_far(calibrator, cast(AdjustmentMethod, variant.method), params_hat, sample.m, params, seed,
                                       *variant.criterion(params))
                calibrations[name] = result.model_dump(mode="json")
                far = result.alpha_adjusted
            limits = chart.limits_plugin(params_hat, far, source=variant.source, mode=mode)
            limits_list.append(limits)

            runs = {phase: chart.run_chart(values, limits) for phase, values in phases.items()}
            signals[name] = {phase: run.signal_indices for phase, run in runs.items()}
            plot_path = out.with_name(f"{out.stem}_{name}.csv")
            self.repository.save_table(plot_frame(runs), plot_path)
            plot_files[name] = str(plot_path)

        record = ReportRecord(
            command="chart", scenario=params_hat, m=sample.m, alpha=params["alpha"], seed=seed, fit=fit,
            limits=limits_list, signals=signals,
            extras={"variants": list(params["variants"]), "plot_files": plot_files,
                    "calibrations": calibrations, "seed_generated": generated},
        )
        self.repository.save_record(record, out)
        return record
