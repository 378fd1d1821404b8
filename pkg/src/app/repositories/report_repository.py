import logging
from pathlib import Path
from typing import Union

import pandas as pd

from src.app.core.exceptions import ReportIOError
from src.app.schemas.report import ReportRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ReportRepository:
    """Persists command results: JSON report records and delimited tables."""

    @staticmethod
    def _prepare(path: PathLike) -> Path:
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportIOError(f"cannot create directory: {e.strerror or e}", path=str(target)) from e
        return target

    def save_record(self, record: ReportRecord, path: PathLike) -> Path:
        target = self._prepare(path)
        try:
            with open(target, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(record.model_dump_json(indent=2))
                handle.write("\n")
        except OSError as e:
            logger.error(f"Error writing report for '{record.command}' to {target}: {e}")
            raise ReportIOError(f"cannot write report: {e.strerror or e}", path=str(target)) from e
        logger.info(f"Report for '{record.command}' written to {target}")
        return target

    def load_record(self, path: PathLike) -> ReportRecord:
        try:
            with open(path, encoding="utf-8") as handle:
                return ReportRecord.model_validate_json(handle.read())
        except OSError as e:
            raise ReportIOError(f"cannot read report: {e.strerror or e}", path=str(path)) from e

    def save_table(self, frame: pd.DataFrame, path: PathLike) -> Path:
        """Writes `frame` as CSV without the index; floats are written in their shortest exact form."""
        target = self._prepare(path)
        try:
            frame.to_csv(target, index=False, lineterminator="\n")
        except OSError as e:
            logger.error(f"Error writing table to {target}: {e}")
            raise ReportIOError(f"cannot write table: {e.strerror or e}", path=str(target)) from e
        logger.info(f"Table with {len(frame)} row(s) written to {target}")
        return target
