from enum import Enum


class PointStatus(str, Enum):
    """Status of a single plotted observation against a pair of control limits."""
    IN = "in"
    ABOVE_UCL = "above-ucl"
    BELOW_LCL = "below-lcl"


class LimitSource(str, Enum):
    """How a pair of control limits was obtained."""
    KNOWN = "known"
    PLUGIN = "plugin"
    ADJUSTED_A = "adjusted-A"
    ADJUSTED_B = "adjusted-B"


class AdjustmentMethod(str, Enum):
    A = "A"
    B = "B"


class CenterLineMode(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"
