"""
End-to-end tests of the command line: exit codes, output files and the
check-only mode, on small 2*pi-periodic scenarios.
"""

import numpy as np
import pytest

import main
from src.config_loader import parse_config
from src.models.base_model import BaseTransportModel
from src.verification import CHECKS, EstimateVerdict, available_checks

ZERO_SCENARIO = """
[zero]
model = hilbert
gamma = 1
n_points = 64
domain_length = 2pi
initial = zero
t_final = 0.2
dt = 0.05
record_every = 1
"""

BUMP_SCENARIO = """
[bump]
model = hilbert
gamma = 1
n_points = 64
domain_length = 2pi
bump_mode = 1
t_final = 0.2
dt = 0.01
"""


@pytest.fixture
def config_file(tmp_path):
    def write(text: str, name: str = "scenarios.ini") -> str:
        path = tmp_path / name
        path.write_text(text.lstrip(), encoding="utf-8")
        return str(path)

    return write


def _scenarios(text, prefix):
    return [s.model_copy(update={"output_prefix": prefix}) for s in parse_config(text)]


class TestExecute:
    def test_zero_data_passes_every_check(self, tmp_path, capsys):
        prefix = str(tmp_path / "zero")
        assert main.execute(_scenarios(ZERO_SCENARIO, prefix)) == main.EXIT_OK
        assert (tmp_path / "zero_series.csv").exists()
        lines = (tmp_path / "zero_verdicts.txt").read_text(encoding="utf-8").splitlines()
        assert [line.split(",")[0] for line in lines] == list(CHECKS)
        assert all(line.split(",")[2] != "false" for line in lines)
        assert "zero: completed, 5 records" in capsys.readouterr().out

    def test_bump_passes(self, tmp_path):
        assert main.execute(_scenarios(BUMP_SCENARIO, str(tmp_path / "bump"))) == main.EXIT_OK

    def test_blow_up_exit_code(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setattr(BaseTransportModel, "nonlinear_coefficients", lambda self, c, g, p: np.full_like(c, np.nan))
        assert main.execute(_scenarios(BUMP_SCENARIO, str(tmp_path / "bump"))) == main.EXIT_BLOW_UP
        assert "blow_up at t=0.01" in capsys.readouterr().out

    def test_failed_check_exit_code(self, tmp_path, monkeypatch):
        failing = EstimateVerdict(name="min_max", holds=False, worst_margin=-1.0, tolerance=0.0)
        monkeypatch.setitem(CHECKS, "min_max", lambda series, params, weight: failing)
        text = ZERO_SCENARIO + "checks = min_max\n"
        assert main.execute(_scenarios(text, str(tmp_path / "zero"))) == main.EXIT_CHECK_FAILED

    def test_blow_up_wins_over_failed_checks(self, tmp_path, monkeypatch):
        failing = EstimateVerdict(name="min_max", holds=False, worst_margin=-1.0, tolerance=0.0)
        monkeypatch.setitem(CHECKS, "min_max", lambda series, params, weight: failing)
        monkeypatch.setattr(BaseTransportModel, "nonlinear_coefficients", lambda self, c, g, p: np.full_like(c, np.nan))
        assert main.execute(_scenarios(BUMP_SCENARIO, str(tmp_path / "bump"))) == main.EXIT_BLOW_UP

    def test_check_only_without_series(self, tmp_path):
        assert main.execute(_scenarios(ZERO_SCENARIO, str(tmp_path / "absent")), check_only=True) == main.EXIT_USAGE


class TestMain:
    def test_list_checks(self, capsys):
        assert main.main(["--list-checks"]) == main.EXIT_OK
        assert capsys.readouterr().out.split() == available_checks()

    def test_config_is_required(self):
        assert main.main([]) == main.EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert main.main(["--config", str(tmp_path / "absent.ini")]) == main.EXIT_USAGE

    def test_invalid_config(self, config_file):
        path = config_file("[bad]\nmodel = hilbert\ngamma = 2.5\nt_final = 1\n")
        assert main.main(["--config", path]) == main.EXIT_USAGE

    def test_unknown_scenario(self, config_file, tmp_path):
        path = config_file(ZERO_SCENARIO)
        assert main.main(["--config", path, "--scenario", "other", "--out", str(tmp_path / "x")]) == main.EXIT_USAGE

    def test_negative_seed(self, config_file):
        assert main.main(["--config", config_file(ZERO_SCENARIO), "--seed", "-1"]) == main.EXIT_USAGE

    def test_run_then_check_only(self, config_file, tmp_path):
        path = config_file(ZERO_SCENARIO)
        out = str(tmp_path / "run")
        assert main.main(["--config", path, "--out", out]) == main.EXIT_OK
        series = (tmp_path / "run_series.csv").read_bytes()
        (tmp_path / "run_verdicts.txt").unlink()

        assert main.main(["--config", path, "--out", out, "--check-only"]) == main.EXIT_OK
        assert (tmp_path / "run_verdicts.txt").exists()
        assert (tmp_path / "run_series.csv").read_bytes() == series

    def test_out_with_several_scenarios(self, config_file, tmp_path):
        path = config_file(ZERO_SCENARIO + BUMP_SCENARIO)
        out = str(tmp_path / "lab")
        assert main.main(["--config", path, "--out", out]) == main.EXIT_OK
        assert (tmp_path / "lab_zero_series.csv").exists()
        assert (tmp_path / "lab_bump_series.csv").exists()

    def test_scenario_selection(self, config_file, tmp_path):
        path = config_file(ZERO_SCENARIO + BUMP_SCENARIO)
        out = str(tmp_path / "only")
        assert main.main(["--config", path, "--scenario", "bump", "--out", out]) == main.EXIT_OK
        assert (tmp_path / "only_series.csv").exists()
        assert not (tmp_path / "only_zero_series.csv").exists()
