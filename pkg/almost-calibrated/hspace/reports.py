"""
Report files: CSV tables written through pandas and key = value summaries.
Floats are written with a fixed format so identical runs give identical bytes.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

LOGGER = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def csv_text(rows: list[dict], columns: list[str]) -> str:
    """Rows rendered as CSV with a header naming `columns` in order."""
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows, columns))
    LOGGER.info("Wrote %d rows to %s", len(rows), path)
    return path


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if math.isnan(value) else FLOAT_FORMAT % value
    return str(value)


def summary_text(record: dict) -> str:
    return "".join(f"{key} = {format_value(record[key])}\n" for key in sorted(record))


def write_summary(path: str | Path, record: dict) -> Path:
    """key = value lines in sorted key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary_text(record))
    LOGGER.info("Wrote summary %s", path)
    return path


def read_summary(path: str | Path) -> dict[str, str]:
    record = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition(" = ")
        record[key] = value
    return record
