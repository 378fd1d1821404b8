import logging
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from src.app.lib import kuma_dist
from src.app.lib.data_files import read_data_file, write_data_file
from src.app.lib.mle_fit import fit_mle
from src.app.lib.rng import root_stream
from src.app.schemas.command import CommandDefinition, CommandInputSchema, CommandOption
from src.app.schemas.distribution import SCENARIOS
from src.app.schemas.fit import PhaseISample
from src.app.schemas.report import ReportRecord
from src.app.services.commands.base_command import (
    PARAM_OPTIONS,
    SEED_OPTION,
    BaseCommand,
    resolve_params,
    resolve_seed,
    validated,
)

logger = logging.getLogger(__name__)

# --- SimulateCommand ---

SIMULATE_COMMAND_DEFINITION = CommandDefinition(
    name="simulate",
    description="Draw n observations from a Kumaraswamy law and write them one per line.",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            "n": CommandOption(type="integer", description="Number of observations."),
            **SEED_OPTION,
            "out": CommandOption(type="string", description="Data file to write."),
        },
        required=["n", "out"],
    ),
)


class SimulateCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(SIMULATE_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        params0 = resolve_params(params)
        seed, generated = resolve_seed(params)
        values = kuma_dist.sample(params0, params["n"], root_stream(seed))
        write_data_file(params["out"], values, header=f"{params0} n={params['n']} seed={seed}")
        logger.info(f"Wrote {values.size} draws from {params0} to {params['out']}")
        return ReportRecord(
            command="simulate",
            scenario=params0,
            seed=seed,
            extras={"n": int(values.size), "path": params["out"], "sample_mean": float(np.mean(values)),
                    "seed_generated": generated},
        )

    def summary_lines(self, record: ReportRecord) -> List[str]:
        extras = record.extras
        return [f"seed: {record.seed}", f"in-control model: {record.scenario}",
                f"{extras['n']} draws written to {extras['path']} (sample mean {extras['sample_mean']:.6f})"]


# --- FitCommand ---

FIT_COMMAND_DEFINITION = CommandDefinition(
    name="fit",
    description="Maximum-likelihood fit of a Phase I data file.",
    input_schema=CommandInputSchema(
        options={
            "data": CommandOption(type="string", description="Phase I data file, one value per line."),
            "out": CommandOption(type="string", description="Optional JSON report path."),
        },
        required=["data"],
    ),
)


class FitCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(FIT_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        data = read_data_file(params["data"])
        sample = validated(PhaseISample, values=data.values)
        fit = fit_mle(sample)
        record = ReportRecord(command="fit", scenario=fit.params_hat, m=sample.m, fit=fit,
                              extras={"data": data.path})
        if params.get("out"):
            self.repository.save_record(record, params["out"])
        return record


# --- MomentsCommand ---

MOMENTS_COMMAND_DEFINITION = CommandDefinition(
    name="moments",
    description="Mean, variance and median of a Kumaraswamy law (all reference models when none is given).",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            "out": CommandOption(type="string", description="Optional JSON report path."),
        },
    ),
)


class MomentsCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(MOMENTS_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        if all(params.get(k) is None for k in ("theta1", "theta2", "scenario")):
            models = [(s.number, s.params) for s in SCENARIOS.values()]
            scenario = None
        else:
            scenario = resolve_params(params)
            models = [(params.get("scenario"), scenario)]
        rows: List[Dict[str, Any]] = [
            {"scenario": number, "theta1": p.theta1, "theta2": p.theta2,
             "mean": kuma_dist.mean(p), "variance": kuma_dist.variance(p), "median": kuma_dist.median(p)}
            for number, p in models
        ]
        record = ReportRecord(command="moments", scenario=scenario, extras={"moments": rows})
        if params.get("out"):
            self.repository.save_record(record, params["out"])
        return record

    def summary_lines(self, record: ReportRecord) -> List[str]:
        lines = [f"{'theta1':>10} {'theta2':>12} {'mean':>10} {'variance':>10} {'median':>10}"]
        for row in record.extras["moments"]:
            lines.append(f"{row['theta1']:>10g} {row['theta2']:>12g} {row['mean']:>10.6f} "
                         f"{row['variance']:>10.6f} {row['median']:>10.6f}")
        return lines


# --- DensityCommand ---

DENSITY_COMMAND_DEFINITION = CommandDefinition(
    name="density",
    description="Tabulate the density on an interior grid of (0,1) for plotting.",
    input_schema=CommandInputSchema(
        options={
            **PARAM_OPTIONS,
            "points": CommandOption(type="integer", default=200, description="Number of grid points."),
            "out": CommandOption(type="string", description="CSV file with columns y, pdf."),
        },
        required=["out"],
    ),
)


class DensityCommand(BaseCommand):
    def __init__(self, **kwargs: Any):
        super().__init__(DENSITY_COMMAND_DEFINITION, **kwargs)

    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        params0 = resolve_params(params)
        y, density = kuma_dist.density_curve(params0, params["points"])
        self.repository.save_table(pd.DataFrame({"y": y, "pdf": density}), params["out"])
        return ReportRecord(command="density", scenario=params0,
                            extras={"points": int(y.size), "path": params["out"]})
