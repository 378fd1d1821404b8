from typing import Optional


class KumaChartError(Exception):
    """Base class for every expected failure of the toolkit. `exit_code` is what the CLI returns."""
    exit_code: int = 1


class DomainError(KumaChartError, ValueError):
    """An argument lies outside the domain of the operation (e.g. y not in (0,1), alpha not in (0,1))."""
    exit_code = 2


class DataFileError(KumaChartError):
    """A data file could not be parsed. Carries the path and the 1-based offending line."""
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class FitError(KumaChartError):
    exit_code = 4


class DegenerateSampleError(FitError):
    """All Phase I values are identical (or the profile equation has no finite root)."""


class CalibrationInfeasibleError(KumaChartError):
    exit_code = 5


class MonotonicityError(CalibrationInfeasibleError):
    """A calibration criterion moved against its expected direction on the alpha grid."""


class StudyFailureError(KumaChartError):
    """Too many replications failed to produce a converged fit."""
    exit_code = 6


class ArlOverflowError(KumaChartError):
    """The signal probability underflowed to zero so the run length is unbounded."""
    exit_code = 7


class ReportIOError(KumaChartError):
    exit_code = 8

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InputIOError(ReportIOError):
    """An input data file could not be opened or read."""
