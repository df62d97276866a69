"""
Tests for the integrating-factor stepper and the run driver.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import BlowUpError
from src.functionals import DiagnosticsRecord
from src.models.base_model import BaseTransportModel
from src.models.initial_data import InitialDataSpec, PositiveBump, Zero
from src.models.params import ModelParams
from src.spectral_core import Field, Grid
from src.timestepper import CflStep, FixedStep, RunConfig, TimeSeries, _cfl_dt, choose_dt, run, step


def _nan_nonlinearity(monkeypatch):
    monkeypatch.setattr(
        BaseTransportModel,
        "nonlinear_coefficients",
        lambda self, c, g, p: np.full_like(c, np.nan),
    )


def _l2(a, b, grid):
    return float(np.sqrt(grid.dx * np.sum((a - b) ** 2)))


@pytest.fixture
def small_bump():
    return InitialDataSpec(shape=PositiveBump(base=0.5, amplitude=0.25))


class TestStep:
    def test_linear_flow_is_exact(self, grid):
        params = ModelParams(gamma=1.0, nonlinear=False)
        theta = step(Field.from_function(np.cos, grid), params, 0.1)
        assert np.max(np.abs(theta.values - np.exp(-0.1) * np.cos(grid.nodes))) < 1e-13

    @pytest.mark.parametrize("scheme", ["rk2", "rk4"])
    def test_constant_is_stationary(self, grid, hilbert_params, scheme):
        theta = Field.from_values(np.full(grid.n_points, 2.0), grid)
        stepped = step(theta, hilbert_params, 0.1, scheme=scheme)
        assert np.allclose(stepped.values, 2.0, atol=1e-13)

    def test_rejects_nonpositive_dt(self, grid, hilbert_params):
        with pytest.raises(ValueError):
            step(Field.from_function(np.cos, grid), hilbert_params, 0.0)

    def test_non_finite_state_raises(self, grid, hilbert_params, monkeypatch):
        _nan_nonlinearity(monkeypatch)
        with pytest.raises(BlowUpError) as excinfo:
            step(Field.from_function(np.cos, grid), hilbert_params, 0.1, t=1.0)
        assert excinfo.value.time == pytest.approx(1.1)


class TestTimeStepChoice:
    def test_cfl_formula(self):
        assert _cfl_dt(2.0, 0.1, 0.5) == pytest.approx(0.025)
        assert _cfl_dt(0.0, 0.1, 0.5) == pytest.approx(0.05)
        assert _cfl_dt(0.5, 0.1, 0.5) == pytest.approx(0.05)

    def test_halving_dx_halves_dt(self, hilbert_params):
        coarse = Grid.create(n_points=64, domain_length=2 * np.pi)
        fine = Grid.create(n_points=128, domain_length=2 * np.pi)
        dt_coarse = choose_dt(Field.from_function(lambda x: 3 * np.cos(x), coarse), hilbert_params, 0.5)
        dt_fine = choose_dt(Field.from_function(lambda x: 3 * np.cos(x), fine), hilbert_params, 0.5)
        assert dt_coarse == pytest.approx(2.0 * dt_fine, rel=1e-12)
        assert dt_coarse == pytest.approx(0.5 * coarse.dx / 3.0, rel=1e-12)

    def test_policies_validate(self):
        with pytest.raises(ValidationError):
            FixedStep(dt=0.0)
        with pytest.raises(ValidationError):
            CflStep(c=1.5)


class TestConvergenceOrder:
    @staticmethod
    def _final(grid, initial, dt, scheme):
        cfg = RunConfig(
            grid=grid,
            params=ModelParams(gamma=1.0, delta=1.0),
            initial=initial,
            t_final=0.5,
            dt_policy=FixedStep(dt=dt),
            record_every=1000,
            scheme=scheme,
        )
        return run(cfg).final_values

    def test_rk2_is_second_order(self, grid, small_bump):
        finals = [self._final(grid, small_bump, dt, "rk2") for dt in (0.01, 0.005, 0.0025)]
        order = np.log2(_l2(finals[0], finals[1], grid) / _l2(finals[1], finals[2], grid))
        assert order >= 1.9

    def test_rk4_is_fourth_order(self, grid, small_bump):
        finals = [self._final(grid, small_bump, dt, "rk4") for dt in (0.05, 0.025, 0.0125)]
        order = np.log2(_l2(finals[0], finals[1], grid) / _l2(finals[1], finals[2], grid))
        assert order >= 3.5


class TestRun:
    def test_zero_data_stays_zero(self, grid, hilbert_params):
        cfg = RunConfig(
            grid=grid,
            params=hilbert_params,
            initial=InitialDataSpec(shape=Zero()),
            t_final=0.5,
            dt_policy=FixedStep(dt=0.05),
            record_every=2,
        )
        series = run(cfg)
        assert series.status == "completed"
        assert len(series.records) == 6
        assert series.times[-1] == 0.5
        assert np.all(series.column("linf") == 0.0)

    def test_cfl_run_lands_on_final_time(self, grid, hilbert_params):
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=0.3, dt_policy=CflStep(c=0.5))
        series = run(cfg)
        assert series.status == "completed"
        assert series.times[-1] == 0.3
        assert np.all(np.diff(series.times) > 0.0)

    def test_linear_run_matches_exponential_decay(self, grid):
        cfg = RunConfig(
            grid=grid,
            params=ModelParams(gamma=1.0, nonlinear=False),
            initial=InitialDataSpec(shape=PositiveBump(base=2.0, amplitude=1.0)),
            t_final=1.0,
            dt_policy=FixedStep(dt=0.1),
        )
        final = run(cfg).final_values
        expected = 2.0 + np.exp(-1.0) * np.cos(grid.nodes)
        assert np.max(np.abs(final - expected)) < 1e-12

    def test_blow_up_is_reported(self, grid, hilbert_params, monkeypatch):
        _nan_nonlinearity(monkeypatch)
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=1.0, dt_policy=FixedStep(dt=0.1))
        series = run(cfg)
        assert series.status == "blow_up"
        assert series.status_time == pytest.approx(0.1)
        assert len(series.records) == 1
        assert np.allclose(series.final_values, series.initial_values, atol=1e-13)

    def test_monitor_stops_the_run(self, grid, hilbert_params):
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=1.0, dt_policy=FixedStep(dt=0.1), record_every=2)
        series = run(cfg, monitor=lambda partial: ("min_max", -1.0))
        assert series.status == "check_failed"
        assert series.failed_check == "min_max"
        assert series.failed_margin == -1.0
        assert series.status_time == pytest.approx(0.2)
        assert len(series.records) == 2

    def test_runs_are_deterministic(self, grid, hilbert_params):
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=0.5, dt_policy=FixedStep(dt=0.01))
        first, second = run(cfg), run(cfg)
        assert first.to_frame().equals(second.to_frame())
        assert np.array_equal(first.final_values, second.final_values)

    def test_kept_fields_follow_records(self, grid, hilbert_params):
        cfg = RunConfig(
            grid=grid, params=hilbert_params, t_final=0.5, dt_policy=FixedStep(dt=0.05), record_every=3, keep_fields=True
        )
        series = run(cfg)
        assert len(series.fields) == len(series.records)
        assert np.array_equal(series.fields[-1], series.final_values)

    def test_running_integrals_are_nondecreasing(self, grid, hilbert_params):
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=0.5, dt_policy=FixedStep(dt=0.01), record_every=5)
        series = run(cfg)
        for name in ("sobolev_dissipation_running", "l2_dissipation_running", "half_dissipation_running"):
            assert np.all(np.diff(series.column(name)) >= 0.0)

    def test_bump_stays_between_its_bounds(self, grid, hilbert_params):
        cfg = RunConfig(grid=grid, params=hilbert_params, t_final=1.0, dt_policy=FixedStep(dt=0.01))
        series = run(cfg)
        assert series.column("min_val").min() >= 1.0 - 1e-8
        assert series.column("max_val").max() <= 3.0 + 1e-8


class TestMassIdentity:
    @staticmethod
    def _residual(grid, delta, dt):
        cfg = RunConfig(
            grid=grid,
            params=ModelParams(gamma=1.0, delta=delta),
            t_final=0.5,
            dt_policy=FixedStep(dt=dt),
        )
        last = run(cfg).records
        return last[-1].mass - last[0].mass - (1.0 - delta) * last[-1].half_dissipation_running

    def test_residual_is_second_order(self, grid):
        coarse = abs(self._residual(grid, 0.5, 0.01))
        fine = abs(self._residual(grid, 0.5, 0.005))
        assert coarse / fine > 3.0

    def test_mass_is_conserved_for_delta_one(self, grid):
        assert abs(self._residual(grid, 1.0, 0.01)) < 1e-10


class TestTimeSeries:
    def test_first_record_must_be_at_zero(self, make_series):
        with pytest.raises(ValidationError):
            make_series(t=[0.1, 0.2], l2=[1.0, 1.0])

    def test_times_must_increase(self, make_series):
        with pytest.raises(ValidationError):
            make_series(t=[0.0, 0.2, 0.2], l2=[1.0, 1.0, 1.0])

    def test_frame_round_trip(self, make_series):
        series = make_series(l2=[1.0, 0.5, 0.25], mass=[2.0, 2.0, 2.0])
        frame = series.to_frame()
        assert list(frame.columns) == DiagnosticsRecord.columns()
        assert TimeSeries.from_frame(frame).records == series.records

    def test_missing_fields_give_none(self, make_series):
        series = make_series(l2=[1.0])
        assert series.initial_field() is None
        assert series.final_field() is None
