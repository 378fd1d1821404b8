from typing import Any, Dict, Final, List, Optional

from pydantic import BaseModel, Field

from src.app.schemas.calibration import AdjustmentResult
from src.app.schemas.chart import ControlLimits
from src.app.schemas.distribution import KumaParams
from src.app.schemas.fit import FitResult
from src.app.schemas.study import CarlSummary

SCHEMA_VERSION: Final[str] = "1.0"


class ReportRecord(BaseModel):
    """Machine-readable result of one CLI command.

    Floats are serialized by pydantic with full double precision.
    """
    schema_version: str = SCHEMA_VERSION
    command: str
    scenario: Optional[KumaParams] = None
    m: Optional[int] = None
    alpha: Optional[float] = None
    seed: Optional[int] = None
    fit: Optional[FitResult] = None
    limits: List[ControlLimits] = Field(default_factory=list)
    summary: Optional[CarlSummary] = None
    calibration: Optional[AdjustmentResult] = None
    signals: Dict[str, Dict[str, List[int]]] = Field(default_factory=dict, description="limit source -> phase -> 1-based signal indices")
    extras: Dict[str, Any] = Field(default_factory=dict)
