"""Tests for the series and verdict files."""

import numpy as np
import pandas as pd
import pytest

from src.errors import ResultsFormatError
from src.functionals import DiagnosticsRecord
from src.results_store import read_series, series_path, verdicts_path, write_series, write_verdicts
from src.verification import EstimateVerdict


@pytest.fixture
def series(make_series):
    return make_series(l2=[1.0, 0.9, 0.8], mass=[2.0, 2.0, 2.0], a1=[1.0 / 3.0, 0.25, 0.2])


def test_paths():
    assert series_path("out/run") == "out/run_series.csv"
    assert verdicts_path("out/run") == "out/run_verdicts.txt"


def test_series_round_trip(tmp_path, series):
    prefix = str(tmp_path / "nested" / "run")
    write_series(series, prefix)
    loaded = read_series(prefix)
    assert loaded.grid is None and loaded.fields is None
    for name in DiagnosticsRecord.columns():
        assert np.allclose(loaded.column(name), series.column(name), rtol=1e-15, atol=0.0)


def test_header_follows_the_record_fields(tmp_path, series):
    path = write_series(series, str(tmp_path / "run"))
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
    assert header.split(",") == DiagnosticsRecord.columns()


def test_rewrites_are_byte_identical(tmp_path, series):
    first = write_series(series, str(tmp_path / "a"))
    second = write_series(series, str(tmp_path / "b"))
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_wrong_header_is_rejected(tmp_path):
    prefix = str(tmp_path / "run")
    pd.DataFrame({"t": [0.0], "energy": [1.0]}).to_csv(series_path(prefix), index=False)
    with pytest.raises(ResultsFormatError, match="energy|missing"):
        read_series(prefix)


def test_empty_series_is_rejected(tmp_path):
    prefix = str(tmp_path / "run")
    with open(series_path(prefix), "w", encoding="utf-8") as handle:
        handle.write(",".join(DiagnosticsRecord.columns()) + "\n")
    with pytest.raises(ResultsFormatError):
        read_series(prefix)


def test_missing_series_raises_os_error(tmp_path):
    with pytest.raises(OSError):
        read_series(str(tmp_path / "absent"))


def test_verdict_lines(tmp_path):
    verdicts = [
        EstimateVerdict(name="energy", holds=True, worst_margin=0.125, tolerance=1e-4),
        EstimateVerdict(name="min_max", holds=False, worst_margin=-0.5, tolerance=1e-6),
        EstimateVerdict(name="critical_coupling", holds=False, worst_margin=float("nan"), tolerance=1e-10, applicable=False),
    ]
    path = write_verdicts(verdicts, str(tmp_path / "run"))
    with open(path, encoding="utf-8") as handle:
        rows = [line.rstrip("\n").split(",") for line in handle]

    assert [row[:3] for row in rows] == [
        ["energy", "true", "true"],
        ["min_max", "true", "false"],
        ["critical_coupling", "false", "not_asserted"],
    ]
    assert float(rows[0][3]) == 0.125
    assert float(rows[1][4]) == 1e-6
    assert np.isnan(float(rows[2][3]))
