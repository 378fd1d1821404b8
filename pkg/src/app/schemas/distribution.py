from typing import Final, Dict

from pydantic import BaseModel, ConfigDict, Field


class KumaParams(BaseModel):
    """Shape parameters (theta1, theta2) of a Kumaraswamy law on (0,1)."""
    model_config = ConfigDict(frozen=True)

    theta1: float = Field(..., gt=0, allow_inf_nan=False, description="First shape parameter")
    theta2: float = Field(..., gt=0, allow_inf_nan=False, description="Second shape parameter")

    def __str__(self) -> str:
        return f"Kuma({self.theta1:g}, {self.theta2:g})"


class ShiftSpec(BaseModel):
    """Multiplicative shifts mapping in-control (theta01, theta02) to (delta1*theta01, delta2*theta02)."""
    model_config = ConfigDict(frozen=True)

    delta1: float = Field(1.0, gt=0, allow_inf_nan=False, description="Factor applied to theta1")
    delta2: float = Field(1.0, gt=0, allow_inf_nan=False, description="Factor applied to theta2")


IN_CONTROL: Final[ShiftSpec] = ShiftSpec(delta1=1.0, delta2=1.0)


class Scenario(BaseModel):
    """A reference in-control model with its printed moments."""
    model_config = ConfigDict(frozen=True)

    number: int
    params: KumaParams
    mean: float
    variance: float


SCENARIOS: Final[Dict[int, Scenario]] = {
    1: Scenario(number=1, params=KumaParams(theta1=2, theta2=30), mean=0.159814, variance=0.006718),
    2: Scenario(number=2, params=KumaParams(theta1=3, theta2=12), mean=0.383049, variance=0.017950),
    3: Scenario(number=3, params=KumaParams(theta1=12, theta2=100), mean=0.652578, variance=0.004333),
}
