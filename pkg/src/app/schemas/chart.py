from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.app.schemas.status import LimitSource, PointStatus


class ControlLimits(BaseModel):
    """Equal-tail probability limits of the two-sided chart and the FAR that produced them."""
    model_config = ConfigDict(frozen=True)

    lcl: float = Field(..., gt=0, lt=1, description="Lower control limit")
    ucl: float = Field(..., gt=0, lt=1, description="Upper control limit")
    cl: float = Field(..., gt=0, lt=1, description="Center line (median by default)")
    far: float = Field(..., gt=0, lt=1, description="False alarm rate used to derive the limits")
    source: LimitSource = LimitSource.KNOWN

    @model_validator(mode='after')
    def limits_must_nest(self) -> 'ControlLimits':
        if not (self.lcl < self.cl < self.ucl):
            raise ValueError(f"limits must satisfy lcl < cl < ucl, got ({self.lcl}, {self.cl}, {self.ucl})")
        return self


class ChartPoint(BaseModel):
    index: int = Field(..., ge=1, description="1-based position in the monitored sequence")
    value: float
    status: PointStatus


class ChartRun(BaseModel):
    """Outcome of applying one pair of limits to a sequence of observations."""
    limits: ControlLimits
    points: List[ChartPoint]
    signal_indices: List[int] = Field(default_factory=list)

    @property
    def n_signals(self) -> int:
        return len(self.signal_indices)
