"""Experiment reports and their flat-file encodings."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import UTC, datetime
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np

from .const import DOMAIN, FIT_MIN_ROWS, FLOAT_FORMAT, REPORT_JSON, ROWS_CSV
from .errors import ConfigurationError

logger = logging.getLogger(__name__)


class ReportKind(StrEnum):
    M_SWEEP = "MSweep"
    C_SWEEP = "CSweep"
    BETA_SWEEP = "BetaSweep"
    VERIFY = "Verify"
    FD_CHECK = "FdCheck"
    BLOWUP = "Blowup"


@dataclass(frozen=True)
class LogFit:
    """Least-squares fit G = slope * log(m) + intercept."""

    slope: float
    intercept: float
    r_squared: float
    dropped: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "dropped": self.dropped,
        }


def format_cell(value: Any) -> str:
    """Render one CSV cell; floats carry 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple | np.ndarray):
        return [to_jsonable(v) for v in value]
    if isinstance(value, bool | np.bool_):
        return bool(value)
    if isinstance(value, int | np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        number = float(value)
        return number if math.isfinite(number) else str(number)
    if isinstance(value, StrEnum):
        return str(value)
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def write_rows_csv(
    columns: Sequence[str], rows: Iterable[Mapping[str, Any]], path: Path
) -> Path:
    """Write rows in the given column order; missing cells are left empty."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(format_cell(row.get(column)) for column in columns)
    return path


def write_json(data: Mapping[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(data), indent=2) + "\n", encoding="utf-8")
    return path


@dataclass
class ExperimentReport:
    """Rows, fit, acceptance checks and resolved configuration of one run.

    ``checks`` maps acceptance-check names to outcomes; the report passes
    when every check does. Rows are written in the order given, so runners
    sort them by parameter before building the report.
    """

    kind: ReportKind
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    config_echo: dict[str, Any]
    fit: LogFit | None = None
    summary: dict[str, Any] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.rows:
            raise ConfigurationError(f"{self.kind} report has no rows")
        if self.fit is not None and (self.kind is not ReportKind.M_SWEEP or len(self.rows) < FIT_MIN_ROWS):
            raise ConfigurationError(f"a fit is only defined for MSweep with >= {FIT_MIN_ROWS} rows")

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, timestamp: str | None = None) -> dict[str, Any]:
        data: dict[str, Any] = {
            "tool": DOMAIN,
            "kind": str(self.kind),
            "passed": self.passed,
            "checks": dict(self.checks),
            "summary": dict(self.summary),
            "fit": self.fit.to_dict() if self.fit else None,
            "warnings": list(self.warnings),
            "config": dict(self.config_echo),
            "rows": len(self.rows),
        }
        if timestamp is not None:
            data["timestamp"] = timestamp
        return data

    def write(self, out_dir: Path) -> tuple[Path, Path]:
        """Write report.json (timestamped) and rows.csv (deterministic)."""
        out_dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now(UTC).isoformat(timespec="seconds")
        json_path = write_json(self.to_dict(timestamp=stamp), out_dir / REPORT_JSON)
        csv_path = write_rows_csv(self.columns, self.rows, out_dir / ROWS_CSV)
        logger.info("wrote %s report to %s", self.kind, out_dir)
        return json_path, csv_path
