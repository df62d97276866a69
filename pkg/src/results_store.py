# src/results_store.py

import logging
import os
from typing import List

import pandas as pd

from src.errors import ResultsFormatError
from src.functionals import DiagnosticsRecord
from src.timestepper import TimeSeries
from src.verification import EstimateVerdict

logger = logging.getLogger(__name__)

SERIES_SUFFIX = "_series.csv"
VERDICTS_SUFFIX = "_verdicts.txt"
FLOAT_FORMAT = "%.17g"


def series_path(prefix: str) -> str:
    return f"{prefix}{SERIES_SUFFIX}"


def verdicts_path(prefix: str) -> str:
    return f"{prefix}{VERDICTS_SUFFIX}"


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_series(series: TimeSeries, prefix: str) -> str:
    """
    Writes one row per DiagnosticsRecord to <prefix>_series.csv.

    The header enumerates the DiagnosticsRecord fields in declaration order;
    floats are written with 17 significant digits so reruns are byte-identical.
    """
    path = series_path(prefix)
    _ensure_parent(path)
    series.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(series.records)} records to {path}")
    return path


def read_series(prefix: str) -> TimeSeries:
    """
    Reads <prefix>_series.csv back into a TimeSeries (records only).

    Raises:
        OSError: If the file cannot be read
        ResultsFormatError: If the header does not match the DiagnosticsRecord columns
    """
    path = series_path(prefix)
    frame = pd.read_csv(path)
    expected = DiagnosticsRecord.columns()
    if list(frame.columns) != expected:
        missing = sorted(set(expected) - set(frame.columns))
        logger.error(f"Series file {path} has an unexpected header (missing: {missing})")
        raise ResultsFormatError(f"{path} does not have the series column layout; missing {missing}")
    if frame.empty:
        raise ResultsFormatError(f"{path} holds no records")
    logger.info(f"Read {len(frame)} records from {path}")
    return TimeSeries.from_frame(frame)


def format_verdict(verdict: EstimateVerdict) -> str:
    applicable = "true" if verdict.applicable else "false"
    return f"{verdict.name},{applicable},{verdict.holds_label},{verdict.worst_margin:.17g},{verdict.tolerance:.17g}"


def write_verdicts(verdicts: List[EstimateVerdict], prefix: str) -> str:
    """One line per verdict: name,applicable,holds,worst_margin,tolerance."""
    path = verdicts_path(prefix)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as handle:
        for verdict in verdicts:
            handle.write(format_verdict(verdict) + "\n")
    logger.info(f"Wrote {len(verdicts)} verdicts to {path}")
    return path
