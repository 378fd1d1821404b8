from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field


class DataFile(BaseModel):
    """Observations read from a text file: one value per line, '#' comments and blank lines skipped."""
    model_config = ConfigDict(frozen=True)

    path: str
    values: Tuple[float, ...] = Field(..., description="Parsed values, each strictly inside (0, 1)")
    line_numbers: Tuple[int, ...] = Field(default=(), description="Source line of each value")

    @property
    def n(self) -> int:
        return len(self.values)
