import math
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.app.schemas.distribution import KumaParams


class PhaseISample(BaseModel):
    """Retrospective calibration sample X_1..X_m, every value strictly inside (0,1)."""
    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...] = Field(..., description="Observations in recording order")

    @field_validator('values')
    @classmethod
    def values_must_be_interior(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 2:
            raise ValueError(f"a Phase I sample needs at least 2 values, got {len(v)}")
        for i, x in enumerate(v, start=1):
            if not (math.isfinite(x) and 0.0 < x < 1.0):
                raise ValueError(f"value #{i} = {x!r} is outside the open interval (0, 1)")
        return v

    @property
    def m(self) -> int:
        return len(self.values)


class FitResult(BaseModel):
    """Maximum-likelihood fit of a Kumaraswamy law to a Phase I sample."""
    params_hat: KumaParams
    std_errors: Tuple[float, float] = Field(..., description="Standard errors of (theta1_hat, theta2_hat); NaN if the information matrix is singular")
    loglik: float
    converged: bool
    gradient_norm: float = Field(..., ge=0, description="Euclidean norm of the score at params_hat")
    iterations: int = Field(0, ge=0, description="Profile likelihood evaluations used by the search")


class FitRecord(BaseModel):
    """Per-replication fit summary retained by the Monte Carlo engine."""
    model_config = ConfigDict(frozen=True)

    theta1_hat: float
    theta2_hat: float
    converged: bool


def records_from_columns(theta1: List[float], theta2: List[float], converged: List[bool]) -> List[FitRecord]:
    return [FitRecord(theta1_hat=a, theta2_hat=b, converged=c) for a, b, c in zip(theta1, theta2, converged)]
