import logging
import math
from pathlib import Path
from typing import Iterable, List, Union

from src.app.core.exceptions import DataFileError, InputIOError, ReportIOError
from src.app.schemas.parser import DataFile

logger = logging.getLogger(__name__)

COMMENT_PREFIX = "#"


def parse_lines(lines: Iterable[str], path: str = "<memory>") -> DataFile:
    """
    Parses observations, one per line, in decimal point notation.

    Args:
        lines: Raw text lines.
        path: Name used in error messages.

    Returns:
        DataFile with the values and their source line numbers.

    Raises:
        DataFileError: naming the first line that is not a number in (0, 1).
    """
    values: List[float] = []
    line_numbers: List[int] = []
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith(COMMENT_PREFIX):
            continue
        try:
            value = float(text)
        except ValueError:
            raise DataFileError(f"not a number: {text!r}", path=path, line=number)
        if not (math.isfinite(value) and 0.0 < value < 1.0):
            raise DataFileError(f"value {text} is outside the open interval (0, 1)", path=path, line=number)
        values.append(value)
        line_numbers.append(number)

    if not values:
        raise DataFileError("no observations found", path=path)
    return DataFile(path=path, values=tuple(values), line_numbers=tuple(line_numbers))


def read_data_file(path: Union[str, Path]) -> DataFile:
    path_str = str(path)
    try:
        with open(path_str, encoding="utf-8") as handle:
            data = parse_lines(handle, path=path_str)
    except OSError as e:
        raise InputIOError(f"cannot read file: {e.strerror or e}", path=path_str) from e
    logger.info(f"Read {data.n} observations from {path_str}")
    return data


def format_value(value: float) -> str:
    """Shortest repr that round-trips the double exactly."""
    return repr(float(value))


def write_data_file(path: Union[str, Path], values: Iterable[float], header: str = "") -> None:
    path_str = str(path)
    lines = [f"{COMMENT_PREFIX} {line}" for line in header.splitlines()] if header else []
    lines.extend(format_value(v) for v in values)
    try:
        Path(path_str).parent.mkdir(parents=True, exist_ok=True)
        with open(path_str, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as e:
        raise ReportIOError(f"cannot write data file: {e.strerror or e}", path=path_str) from e
