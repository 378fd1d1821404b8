import logging
import math
from typing import Any, Dict, List, cast

import pandas as pd

from src.app.core.exceptions import DomainError
from src.app.lib import chart
from src.app.schemas.command import CommandDefinition, CommandInputSchema, CommandOption
from src.app.schemas.distribution import ShiftSpec
from src.app.schemas.report import ReportRecord
from src.app.schemas.status import AdjustmentMethod
from src.app.schemas.study import LimitRule, OocPoint, StudyConfig
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
from src.app.services.commands.chart_commands import FAR_OPTIONS, VARIANTS, calibrate_far
from src.app.services.mc_evaluator import summarize

logger = logging.getLogger(__name__)

# --- IcStudyCommand ---

IC_STUDY_COMMAND_DEFINITION = CommandDefinition(
    name="ic-study",
    description="In-control conditional ARL distribution of plug-in limits (AARL, SDARL, perc, percentiles).",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            **STUDY_OPTIONS,
            "out": CommandOption(type="string", description="Optional JSON report path."),
            "dump_samples": CommandOption(type="string", description="Optional CSV of every replication's fit and CARL."),
        },
        required=["m"],
    ),
)


class IcStudyCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(IC_STUDY_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        params0 = resolve_params(params)
        seed, generated = resolve_seed(params)
        config = validated(StudyConfig, params0=params0, m=params["m"], alpha=params["alpha"],
                           replications=params["reps"], seed=seed)
        sample = self.evaluator.simulate_carl(config)
        reference_arl = 1.0 / config.alpha
        summary = summarize(sample, reference_arl, reference_arl)

        if params.get("dump_samples"):
            frame = pd.DataFrame({
                "replication": range(sample.replications),
                "theta1_hat": [r.theta1_hat for r in sample.fit_records],
                "theta2_hat": [r.theta2_hat for r in sample.fit_records],
                "converged": [r.converged for r in sample.fit_records],
                "carl": [math.nan if v is None else v for v in sample.carl_values],
            })
            self.repository.save_table(frame, params["dump_samples"])

        record = ReportRecord(
            command="ic-study", scenario=params0, m=config.m, alpha=config.alpha, seed=seed,
            limits=[chart.limits_known(params0, config.alpha)], summary=summary,
            extras={"replications": config.replications, "seed_generated": generated},
        )
        if params.get("out"):
            self.repository.save_record(record, params["out"])
        return record


# --- CalibrateCommand ---

CALIBRATE_COMMAND_DEFINITION = CommandDefinition(
    name="calibrate",
    description="Adjusted FAR by method a (AARL band) or b (exceedance probability).",
    input_schema=CommandInputSchema(
        options={
            "method": CommandOption(type="string", enum=["a", "b"], description="Adjustment method."),
            **PARAM_OPTIONS,
            **STUDY_OPTIONS,
            **CALIBRATION_OPTIONS,
            "out": CommandOption(type="string", description="Optional JSON report path."),
        },
        required=["method", "m"],
    ),
)


class CalibrateCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(CALIBRATE_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        params0 = resolve_params(params)
        seed, generated = resolve_seed(params)
        method = AdjustmentMethod(params["method"].upper())
        result = calibrate_far(CalibratorService(self.evaluator), method, params0, params["m"], params, seed,
                               params["p"], params["epsilon"] if method == AdjustmentMethod.B else 0.0)
        record = ReportRecord(
            command="calibrate", scenario=params0, m=params["m"], alpha=params["alpha"], seed=seed,
            summary=result.summary, calibration=result,
            extras={"replications": params["reps"], "p": params["p"], "epsilon": params["epsilon"],
                    "seed_generated": generated},
        )
        if params.get("out"):
            self.repository.save_record(record, params["out"])
        return record


# --- OocStudyCommand ---

OOC_STUDY_COMMAND_DEFINITION = CommandDefinition(
    name="ooc-study",
    description="Out-of-control ARL over a grid of parameter shifts, Case K beside plug-in and adjusted limits.",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            **STUDY_OPTIONS,
            **CALIBRATION_OPTIONS,
            "rules": CommandOption(type="string-list", enum=list(VARIANTS), default=["plugin"],
                                   description="Limit rules to evaluate: plugin, a, b (--p, --epsilon) and b20 (epsilon 0.20, p 0.10)."),
            **FAR_OPTIONS,
            "delta1_grid": CommandOption(type="number-list", description="Shift factors for theta1."),
            "delta2_grid": CommandOption(type="number-list", description="Shift factors for theta2."),
            "allow_simultaneous": CommandOption(type="boolean", default=False,
                                                description="Let both factors move away from 1 in the same run."),
            "out": CommandOption(type="string", description="CSV table, one row per shift."),
            "report": CommandOption(type="string", description="Optional JSON report path."),
            "dump_samples": CommandOption(type="string",
                                          description="Optional CSV of raw CARL values (rule, delta1, delta2, replication, carl)."),
        },
        required=["m", "out"],
    ),
)


def ooc_table(points: Dict[ShiftSpec, OocPoint], rules: List[LimitRule]) -> pd.DataFrame:
    rows = []
    for shift, point in points.items():
        row: Dict[str, Any] = {"delta1": shift.delta1, "delta2": shift.delta2,
                               "case_k_arl": point.case_k_arl, "case_k_sdrl": point.case_k_sdrl}
        for rule in rules:
            s = point.summaries[rule.name]
            row[f"aarl_{rule.name}"] = s.aarl
            row[f"sdarl_{rule.name}"] = s.sdarl
            row[f"median_{rule.name}"] = s.percentiles[0.5]
        rows.append(row)
    return pd.DataFrame(rows)


def sample_table(points: Dict[ShiftSpec, OocPoint]) -> pd.DataFrame:
    rows = []
    for shift, point in points.items():
        for rule_name, values in (point.samples or {}).items():
            for replication, value in enumerate(values):
                rows.append({"rule": rule_name, "delta1": shift.delta1, "delta2": shift.delta2,
                             "replication": replication, "carl": math.nan if value is None else value})
    return pd.DataFrame(rows, columns=["rule", "delta1", "delta2", "replication", "carl"])


class OocStudyCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(OOC_STUDY_COMMAND_DEFINITION, **kwargs)

    @staticmethod
    def _grid(params: Dict[str, Any]) -> List[ShiftSpec]:
        delta1 = params.get("delta1_grid")
        delta2 = params.get("delta2_grid")
        if delta1 is None and delta2 is None:
            delta1 = list(chart.DEFAULT_DELTAS)
        delta1 = delta1 or [1.0]
        delta2 = delta2 or [1.0]
        both_vary = any(d != 1.0 for d in delta1) and any(d != 1.0 for d in delta2)
        if both_vary and not params["allow_simultaneous"]:
            raise DomainError("vary either --delta1-grid or --delta2-grid, or pass --allow-simultaneous")
        return chart.shift_grid(delta1, delta2, allow_simultaneous=params["allow_simultaneous"])

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        params0 = resolve_params(params)
        seed, generated = resolve_seed(params)
        grid = self._grid(params)
        calibrator = CalibratorService(self.evaluator)

        rules: List[LimitRule] = []
        calibrations: Dict[str, Any] = {}
        for name in params["rules"]:
            variant = VARIANTS[name]
            far = params["alpha"] if variant.method is None else params.get(f"far_{name}")
            if far is None:
                result = calibrate_far(calibrator, cast(AdjustmentMethod, variant.method), params0, params["m"],
                                       params, seed, *variant.criterion(params))
                calibrations[name] = result.model_dump(mode="json")
                far = result.alpha_adjusted
            rules.append(validated(LimitRule, name=name, alpha=far, source=variant.source))

        points = self.evaluator.ooc_study(params0, params["m"], rules, grid, params["reps"], seed,
                                          nominal_alpha=params["alpha"],
                                          keep_samples=bool(params.get("dump_samples")))
        table = ooc_table(points, rules)
        self.repository.save_table(table, params["out"])
        if params.get("dump_samples"):
            self.repository.save_table(sample_table(points), params["dump_samples"])

        record = ReportRecord(
            command="ooc-study", scenario=params0, m=params["m"], alpha=params["alpha"], seed=seed,
            extras={"table": params["out"], "rows": len(table), "rules": {r.name: r.alpha for r in rules},
                    "calibrations": calibrations, "seed_generated": generated},
        )
        if params.get("report"):
            self.repository.save_record(record, params["report"])
        return record

    def summary_lines(self, record: ReportRecord) -> List[str]:
        lines = super().summary_lines(record)
        for name, alpha in record.extras["rules"].items():
            lines.append(f"rule {name}: FAR {alpha:.5f}")
        lines.append(f"{record.extras['rows']} shift(s) written to {record.extras['table']}")
        return lines
