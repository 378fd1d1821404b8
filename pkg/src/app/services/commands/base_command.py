from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from src.app.core.config import settings
from src.app.core.exceptions import DomainError
from src.app.lib.rng import new_seed
from src.app.repositories.report_repository import ReportRepository
from src.app.schemas.command import CommandDefinition, CommandOption
from src.app.schemas.distribution import SCENARIOS, KumaParams
from src.app.schemas.report import ReportRecord
from src.app.services.mc_evaluator import MonteCarloEvaluator

ModelT = TypeVar("ModelT", bound=BaseModel)

# --- Option groups shared by several commands ---

PARAM_OPTIONS: Dict[str, CommandOption] = {
    "theta1": CommandOption(type="number", description="First shape parameter of the in-control law."),
    "theta2": CommandOption(type="number", description="Second shape parameter of the in-control law."),
    "scenario": CommandOption(type="integer", enum=sorted(SCENARIOS),
                              description="Reference model 1=(2,30), 2=(3,12), 3=(12,100); replaces --theta1/--theta2."),
}

SEED_OPTION: Dict[str, CommandOption] = {
    "seed": CommandOption(type="integer", description="Random seed; generated and printed when omitted."),
}

STUDY_OPTIONS: Dict[str, CommandOption] = {
    "m": CommandOption(type="integer", description="Phase I sample size."),
    "alpha": CommandOption(type="number", default=settings.DEFAULT_ALPHA, description="Nominal false alarm rate."),
    "reps": CommandOption(type="integer", default=settings.DEFAULT_REPLICATIONS, description="Monte Carlo replications (N)."),
    **SEED_OPTION,
}

CALIBRATION_OPTIONS: Dict[str, CommandOption] = {
    "p": CommandOption(type="number", default=0.05, description="Criterion level of the FAR adjustment."),
    "epsilon": CommandOption(type="number", default=0.0, description="Tolerance of adjustment B."),
    "grid_step": CommandOption(type="number", default=settings.DEFAULT_GRID_STEP, description="Resolution of the FAR search grid."),
}


def validated(model: Type[ModelT], **values: Any) -> ModelT:
    """Builds a schema object from user input, reporting violations as DomainError."""
    try:
        return model(**values)
    except ValidationError as e:
        raise DomainError(f"invalid {model.__name__}: {e}") from e


def resolve_params(params: Dict[str, Any]) -> KumaParams:
    scenario = params.get("scenario")
    if scenario is not None:
        if params.get("theta1") is not None or params.get("theta2") is not None:
            raise DomainError("give either --scenario or --theta1/--theta2, not both")
        return SCENARIOS[scenario].params
    if params.get("theta1") is None or params.get("theta2") is None:
        raise DomainError("both --theta1 and --theta2 (or --scenario) are required")
    return validated(KumaParams, theta1=params["theta1"], theta2=params["theta2"])


def resolve_seed(params: Dict[str, Any]) -> Tuple[int, bool]:
    """The explicit seed, or a fresh one flagged as generated."""
    if params.get("seed") is not None:
        return int(params["seed"]), False
    return new_seed(), True


class BaseCommand(ABC):
    """Abstract base class for all CLI commands."""

    def __init__(self, definition: CommandDefinition, evaluator: Optional[MonteCarloEvaluator] = None,
                 repository: Optional[ReportRepository] = None):
        if definition is None:
            raise ValueError("Command definition cannot be None")
        self._definition = definition
        self._evaluator = evaluator
        self.repository = repository or ReportRepository()

    @property
    def evaluator(self) -> MonteCarloEvaluator:
        if self._evaluator is None:
            self._evaluator = MonteCarloEvaluator()
        return self._evaluator

    def get_definition(self) -> CommandDefinition:
        return self._definition

    def _validate_parameters(self, params: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validates the parameters against the command's input schema.

        Returns:
            The parameters with defaults filled in.

        Raises:
            DomainError: on a missing required option, a type mismatch or a value outside an enum.
        """
        schema = self._definition.input_schema
        schema_model = schema.get_pydantic_model()
        if schema_model is None:
            return dict(params)
        known = {k: v for k, v in params.items() if k in schema.options}
        try:
            values = schema_model(**known).model_dump()
        except ValidationError as e:
            raise DomainError(f"Parameter validation failed: {e}") from e
        for name, option in schema.options.items():
            value = values.get(name)
            if option.enum is None or value is None:
                continue
            chosen = value if isinstance(value, list) else [value]
            bad = [v for v in chosen if v not in option.enum]
            if bad:
                raise DomainError(f"--{name.replace('_', '-')} must be one of {option.enum}, got {bad}")
        return values

    def run(self, params: Dict[str, Any]) -> ReportRecord:
        return self.execute(self._validate_parameters(params))

    @abstractmethod
    def execute(self, params: Dict[str, Any]) -> ReportRecord:
        """
        Executes the command with validated parameters.
        Subclasses must implement this method.
        """

    def summary_lines(self, record: ReportRecord) -> List[str]:
        """Human-readable digest printed to stdout: 6 decimals for limits, 2 for ARLs."""
        lines: List[str] = []
        if record.extras.get("seed_generated"):
            lines.append(f"seed: {record.seed}")
        if record.scenario is not None:
            lines.append(f"in-control model: {record.scenario}")
        if record.fit is not None:
            p = record.fit.params_hat
            se1, se2 = record.fit.std_errors
            lines.append(f"theta1_hat = {p.theta1:.6f} (SE {se1:.6f}), theta2_hat = {p.theta2:.6f} (SE {se2:.6f}), "
                         f"loglik = {record.fit.loglik:.4f}, converged = {record.fit.converged}")
        for limits in record.limits:
            lines.append(f"{limits.source.value:<11} FAR {limits.far:.5f}: LCL {limits.lcl:.6f}  CL {limits.cl:.6f}  UCL {limits.ucl:.6f}")
        if record.calibration is not None:
            c = record.calibration
            lines.append(f"adjusted FAR ({c.method.value}): {c.alpha_adjusted:.5f}  criterion {c.criterion_value:.4f}  "
                         f"grid evaluations {c.iterations}")
        if record.summary is not None:
            s = record.summary
            pct = "  ".join(f"P{int(round(k * 100))}={v:.2f}" for k, v in sorted(s.percentiles.items()))
            lines.append(f"AARL {s.aarl:.2f}  SDARL {s.sdarl:.2f}  perc {100 * s.perc:.2f}%  (ARL0 {s.reference_arl:.2f})")
            lines.append(pct)
        for name, phases in record.signals.items():
            for phase, indices in phases.items():
                lines.append(f"{name} {phase}: {len(indices)} signal(s){' at ' + str(indices) if indices else ''}")
        return lines
