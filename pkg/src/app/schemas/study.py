import math
from typing import Dict, List, Optional, Final, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from src.app.schemas.distribution import KumaParams, ShiftSpec, IN_CONTROL
from src.app.schemas.fit import FitRecord
from src.app.schemas.status import LimitSource

PERCENTILE_LEVELS: Final[Tuple[float, ...]] = (0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95)

MAX_SEED: Final[int] = 2**64 - 1


class StudyConfig(BaseModel):
    """Inputs of one conditional-ARL study (Phase I simulation, fit, plug-in limits, CARL)."""
    model_config = ConfigDict(frozen=True)

    params0: KumaParams = Field(..., description="True in-control parameters")
    m: int = Field(..., ge=2, description="Phase I sample size")
    alpha: float = Field(..., gt=0, lt=1, description="FAR used to build the limits")
    replications: int = Field(..., ge=1, description="Number of simulated Phase I samples (N)")
    seed: int = Field(..., ge=0, le=MAX_SEED)
    shift: ShiftSpec = IN_CONTROL


class CarlSample(BaseModel):
    """Conditional ARL of every replication, with the fit each one came from.

    Replications whose fit did not converge keep their record but carry `None` as CARL.
    """
    carl_values: List[Optional[float]]
    fit_records: List[FitRecord]

    @model_validator(mode='after')
    def one_entry_per_replication(self) -> 'CarlSample':
        if len(self.carl_values) != len(self.fit_records):
            raise ValueError("carl_values and fit_records must have one entry per replication")
        for value in self.carl_values:
            if value is not None and not value >= 1.0:
                raise ValueError(f"conditional ARL values must be >= 1, got {value}")
        return self

    @property
    def replications(self) -> int:
        return len(self.carl_values)

    @property
    def n_failed(self) -> int:
        return sum(1 for v in self.carl_values if v is None)

    def effective_values(self) -> np.ndarray:
        return np.array([v for v in self.carl_values if v is not None], dtype=float)


class CarlSummary(BaseModel):
    """Summary of a conditional ARL distribution (AARL, SDARL, perc and percentiles)."""
    aarl: float
    sdarl: float = Field(..., ge=0)
    sdarl_defined: bool = Field(True, description="False when only one effective replication exists")
    perc: float = Field(..., ge=0, le=1, description="Fraction of CARL values strictly below `threshold`")
    percentiles: Dict[float, float]
    reference_arl: float
    threshold: float
    n_effective: int = Field(..., ge=1)
    n_failed: int = Field(0, ge=0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def sdarl_ratio(self) -> float:
        """SDARL relative to the nominal ARL0; the usual sizing rule asks for 0.05 to 0.10."""
        return self.sdarl / self.reference_arl if self.reference_arl > 0 else math.nan

    @model_validator(mode='after')
    def percentiles_non_decreasing(self) -> 'CarlSummary':
        ordered = [self.percentiles[k] for k in sorted(self.percentiles)]
        if any(b < a for a, b in zip(ordered, ordered[1:])):
            raise ValueError("percentiles must be non-decreasing in level")
        return self


class LimitRule(BaseModel):
    """Plug-in limits at a (possibly adjusted) FAR."""
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Label used in reports, e.g. 'plugin', 'adj-A', 'adj-B'")
    alpha: float = Field(..., gt=0, lt=1)
    source: LimitSource = LimitSource.PLUGIN


class OocPoint(BaseModel):
    """Out-of-control performance at one shift: Case K values and one Case U summary per rule."""
    shift: ShiftSpec
    case_k_arl: float
    case_k_sdrl: float
    summaries: Dict[str, CarlSummary]
    samples: Optional[Dict[str, List[Optional[float]]]] = None
