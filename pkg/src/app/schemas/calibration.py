from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.app.schemas.distribution import KumaParams
from src.app.schemas.status import AdjustmentMethod
from src.app.schemas.study import CarlSummary, MAX_SEED


class AdjustmentRequest(BaseModel):
    """Inputs to the FAR search. Method A ignores `epsilon`."""
    model_config = ConfigDict(frozen=True)

    method: AdjustmentMethod
    params0: KumaParams
    m: int = Field(..., ge=2)
    alpha_nominal: float = Field(..., gt=0, lt=1, description="Nominal FAR; ARL0 = 1/alpha_nominal")
    p: float = Field(..., gt=0, lt=1, description="Criterion level")
    epsilon: float = Field(0.0, ge=0, lt=1, description="Tolerance of the relaxed exceedance criterion")
    replications: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, le=MAX_SEED)
    grid_step: float = Field(1e-5, gt=0, lt=1)

    @property
    def reference_arl(self) -> float:
        return 1.0 / self.alpha_nominal

    @property
    def threshold(self) -> float:
        """Comparison point for the exceedance fraction: ARL0 for method A, (1+eps)^-1 ARL0 for B."""
        if self.method == AdjustmentMethod.A:
            return self.reference_arl
        return self.reference_arl / (1.0 + self.epsilon)


class AdjustmentResult(BaseModel):
    method: AdjustmentMethod
    alpha_adjusted: float = Field(..., gt=0, lt=1)
    summary: CarlSummary
    criterion_value: float = Field(..., description="Relative AARL gap (A) or exceedance fraction (B) at alpha_adjusted")
    iterations: int = Field(..., ge=0, description="Distinct grid points evaluated")
    reference_arl: float
    threshold: float
    boundary_alpha: Optional[float] = Field(None, description="Infeasible grid neighbor on the far side of the criterion boundary")
    boundary_criterion: Optional[float] = None

    @model_validator(mode='after')
    def boundary_is_a_neighbor(self) -> 'AdjustmentResult':
        if (self.boundary_alpha is None) != (self.boundary_criterion is None):
            raise ValueError("boundary_alpha and boundary_criterion are set together")
        return self
