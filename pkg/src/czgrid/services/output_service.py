"""
Output service for writing experiment records
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel

from ..errors import CZGridError

logger = logging.getLogger(__name__)


class OutputError(CZGridError):
    """Result-writing errors"""
    pass


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, list):
            flat[name] = ";".join(str(v) for v in value)
        else:
            flat[name] = value
    return flat


class OutputService:
    """Service for writing records as JSON lines, CSV and a JSON summary"""

    def __init__(self, base_path: Path):
        """
        Initialize output service

        Args:
            base_path: Directory receiving <command>.jsonl, .csv and .json
        """
        self.base_path = Path(base_path)
        self._ensure_directory()

    def _ensure_directory(self):
        try:
            self.base_path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory {self.base_path}: {e}")

    def path(self, command: str, suffix: str) -> Path:
        return self.base_path / f"{command}.{suffix}"

    @staticmethod
    def sorted_lines(records: Sequence[BaseModel]) -> List[str]:
        """One JSON document per record, sorted so reruns are byte-identical"""
        return sorted(record.model_dump_json() for record in records)

    def write_records(
        self, command: str, records: Sequence[BaseModel], csv_mirror: bool = True, sort: bool = True
    ) -> List[Path]:
        """
        Write records to <command>.jsonl and optionally <command>.csv

        Records are sorted unless `sort` is False, for dumps whose order is
        meaningful.

        Returns:
            Paths written

        Raises:
            OutputError: If a file cannot be written
        """
        lines = self.sorted_lines(records) if sort else [r.model_dump_json() for r in records]
        written = [self.path(command, "jsonl")]
        try:
            written[0].write_text("".join(line + "\n" for line in lines), encoding="utf-8")
            if csv_mirror:
                written.append(self._write_csv(self.path(command, "csv"), lines))
        except OSError as e:
            raise OutputError(f"Failed to write {command} records: {e}")

        logger.info(f"Wrote {len(lines)} {command} records to {self.base_path}")
        return written

    @staticmethod
    def _write_csv(path: Path, lines: List[str]) -> Path:
        rows = [_flatten(json.loads(line)) for line in lines]
        columns: List[str] = []
        for row in rows:
            columns.extend(key for key in row if key not in columns)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return path

    def write_summary(self, command: str, summary: Optional[BaseModel]) -> Optional[Path]:
        """Write the command summary to <command>.json"""
        if summary is None:
            return None
        path = self.path(command, "json")
        try:
            path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise OutputError(f"Failed to write {command} summary: {e}")
        return path
