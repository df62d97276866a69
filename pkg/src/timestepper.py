"""
Time integration of the regularized transport equations.

The linear part L = -(nu |k|^gamma + eps k^2) is diagonal in Fourier space and
is integrated exactly through the factor exp(L dt); the transport terms are
advanced explicitly with a second-order (default) or fourth-order
Runge-Kutta scheme in the integrating-factor variables.
"""

import logging
import math
from typing import Annotated, Callable, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
import pydantic
from pydantic import BaseModel, ConfigDict, model_validator

from src.errors import BlowUpError
from src.functionals import (
    DiagnosticsRecord,
    RunningDissipation,
    WeightParams,
    diagnostics_from_coefficients,
    dissipation_rates,
)
from src.model_engine import model_for
from src.models.initial_data import InitialDataSpec, make_initial_data
from src.models.params import ModelParams
from src.spectral_core import Field, Grid, forward_transform, to_values

logger = logging.getLogger(__name__)

BLOW_UP_FACTOR = 1e6
VELOCITY_FLOOR = 1e-8


# =============================================================================
# Configuration and results
# =============================================================================


class FixedStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Literal["fixed"] = "fixed"
    dt: float = pydantic.Field(gt=0.0, allow_inf_nan=False)


class CflStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Literal["cfl"] = "cfl"
    c: float = pydantic.Field(default=0.5, gt=0.0, le=1.0)


DtPolicy = Annotated[Union[FixedStep, CflStep], pydantic.Field(discriminator="policy")]


class RunConfig(BaseModel):
    """Everything needed to reproduce one simulation."""

    model_config = ConfigDict(frozen=True)

    grid: Grid = pydantic.Field(default_factory=Grid.create)
    params: ModelParams
    initial: InitialDataSpec = pydantic.Field(default_factory=InitialDataSpec)
    t_final: float = pydantic.Field(gt=0.0, allow_inf_nan=False)
    dt_policy: DtPolicy = pydantic.Field(default_factory=CflStep)
    record_every: int = pydantic.Field(default=10, ge=1)
    weight_beta: float = pydantic.Field(default=0.5, gt=0.0, lt=1.0)
    checks: List[str] = pydantic.Field(default_factory=list)
    scheme: Literal["rk2", "rk4"] = "rk2"
    keep_fields: bool = False


class TimeSeries(BaseModel):
    """
    Records of one run and how it ended.

    ``status`` is 'completed', 'blow_up' (``status_time`` is the detection
    time) or 'check_failed' (``failed_check`` names the check).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: List[DiagnosticsRecord]
    status: Literal["completed", "blow_up", "check_failed"] = "completed"
    status_time: Optional[float] = None
    failed_check: Optional[str] = None
    failed_margin: Optional[float] = None
    grid: Optional[Grid] = None
    initial_values: Optional[np.ndarray] = None
    final_values: Optional[np.ndarray] = None
    fields: Optional[List[np.ndarray]] = None

    @model_validator(mode="after")
    def validate_times(self) -> "TimeSeries":
        times = [record.t for record in self.records]
        if times and times[0] != 0.0:
            raise ValueError(f"first record must be at t=0, got {times[0]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("record times must be strictly increasing")
        return self

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def initial_field(self) -> Optional[Field]:
        if self.grid is None or self.initial_values is None:
            return None
        return Field.from_values(self.initial_values, self.grid)

    def final_field(self) -> Optional[Field]:
        if self.grid is None or self.final_values is None:
            return None
        return Field.from_values(self.final_values, self.grid)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.model_dump() for record in self.records], columns=DiagnosticsRecord.columns())

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TimeSeries":
        rows = frame[DiagnosticsRecord.columns()].to_dict(orient="records")
        return cls(records=[DiagnosticsRecord(**row) for row in rows])


# =============================================================================
# Integrator
# =============================================================================


class IntegratingFactorStepper:
    """
    Integrating-factor Runge-Kutta stepper in coefficient space.

    RK2 (Heun on v = exp(-L t) theta_hat):
        a = N(v); b = N(E (v + dt a)); v' = E v + dt/2 (E a + b),   E = exp(L dt)
    RK4 is the classical scheme with the half-step factor E2 = exp(L dt / 2).
    With the nonlinearity switched off both reduce to v' = E v.
    """

    def __init__(self, grid: Grid, params: ModelParams, scheme: str = "rk2"):
        self.grid = grid
        self.params = params
        self.scheme = scheme
        self.model = model_for(params.velocity)
        self.linear = self.model.linear_symbol(grid, params)
        self._cached_dt: Optional[float] = None
        self._factor = None
        self._half_factor = None

    def nonlinear(self, v: np.ndarray) -> np.ndarray:
        return self.model.nonlinear_coefficients(v, self.grid, self.params)

    def _factors(self, dt: float):
        if dt != self._cached_dt:
            self._half_factor = np.exp(0.5 * dt * self.linear)
            self._factor = np.exp(dt * self.linear)
            self._cached_dt = dt
        return self._factor, self._half_factor

    def advance(self, v: np.ndarray, dt: float) -> np.ndarray:
        E, E2 = self._factors(dt)
        if not self.params.nonlinear:
            return E * v
        if self.scheme == "rk4":
            k1 = self.nonlinear(v)
            k2 = self.nonlinear(E2 * (v + 0.5 * dt * k1))
            k3 = self.nonlinear(E2 * v + 0.5 * dt * k2)
            k4 = self.nonlinear(E * v + dt * E2 * k3)
            return E * v + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        a = self.nonlinear(v)
        b = self.nonlinear(E * (v + dt * a))
        return E * v + 0.5 * dt * (E * a + b)


def step(theta: Field, params: ModelParams, dt: float, scheme: str = "rk2", t: float = 0.0) -> Field:
    """
    One integrating-factor Runge-Kutta step of size ``dt``.

    Raises:
        ValueError: If dt is not positive
        BlowUpError: If the new state is not finite
    """
    if not dt > 0.0:
        raise ValueError(f"step needs dt > 0, got {dt}")
    stepper = IntegratingFactorStepper(theta.grid, params, scheme)
    v = stepper.advance(forward_transform(theta).coefficients, dt)
    values = to_values(v, theta.grid)
    if not np.all(np.isfinite(values)):
        raise BlowUpError(t + dt)
    return Field.from_values(values, theta.grid)


def _cfl_dt(u_max: float, dx: float, c: float) -> float:
    return min(c * dx / max(u_max, VELOCITY_FLOOR), c * dx)


def choose_dt(theta: Field, params: ModelParams, c: float) -> float:
    """dt = c dx / max(||u||_inf, 1e-8), capped at c dx."""
    model = model_for(params.velocity)
    u_hat = model.velocity_coefficients(forward_transform(theta).coefficients, theta.grid, params.velocity)
    u_max = float(np.max(np.abs(to_values(u_hat, theta.grid))))
    return _cfl_dt(u_max, theta.grid.dx, c)


# =============================================================================
# Driver
# =============================================================================


Monitor = Callable[[TimeSeries], Optional[Tuple[str, float]]]


def run(cfg: RunConfig, monitor: Optional[Monitor] = None) -> TimeSeries:
    """
    Integrate ``cfg`` to t_final.

    A record is taken at t = 0, every ``record_every`` steps and at the final
    time. Dissipation integrals are accumulated with the trapezoidal rule at
    every step. ``monitor`` is called with the partial series after each
    record; returning (check_name, margin) stops the run with status
    'check_failed'.
    """
    grid = cfg.grid
    params = cfg.params
    weight = WeightParams(beta=cfg.weight_beta)
    stepper = IntegratingFactorStepper(grid, params, cfg.scheme)

    theta0 = make_initial_data(cfg.initial, grid)
    v = forward_transform(theta0).coefficients.copy()
    threshold = BLOW_UP_FACTOR * theta0.max_abs()

    running = RunningDissipation(dissipation_rates(v, grid, params.gamma))
    records = [diagnostics_from_coefficients(v, grid, params, weight, 0.0, running)]
    fields = [theta0.values.copy()] if cfg.keep_fields else None

    fixed_dt = None
    n_steps = None
    if isinstance(cfg.dt_policy, FixedStep):
        n_steps = max(1, math.ceil(cfg.t_final / cfg.dt_policy.dt - 1e-9))
        fixed_dt = cfg.t_final / n_steps

    logger.info(
        f"Run start: model={params.velocity.kind}, gamma={params.gamma}, delta={params.delta}, "
        f"nu={params.nu}, eps={params.epsilon_visc}, N={grid.n_points}, T={cfg.t_final}"
    )

    def series(**status) -> TimeSeries:
        return TimeSeries(
            records=records,
            grid=grid,
            initial_values=theta0.values,
            final_values=to_values(v, grid),
            fields=fields,
            **status,
        )

    t = 0.0
    n = 0
    values = theta0.values
    while t < cfg.t_final:
        if fixed_dt is not None:
            dt = fixed_dt
        else:
            u_hat = stepper.model.velocity_coefficients(v, grid, params.velocity)
            dt = _cfl_dt(float(np.max(np.abs(to_values(u_hat, grid)))), grid.dx, cfg.dt_policy.c)
        last = (n + 1 == n_steps) if fixed_dt is not None else (t + dt >= cfg.t_final)
        if last and fixed_dt is None:
            dt = cfg.t_final - t

        v_new = stepper.advance(v, dt)
        t_new = cfg.t_final if last else t + dt
        values = to_values(v_new, grid)
        if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > threshold:
            reason = "non-finite values" if not np.all(np.isfinite(values)) else f"||theta||_inf exceeded {threshold:.3e}"
            logger.error(f"Blow-up at t={t_new:.6g}: {reason}")
            return series(status="blow_up", status_time=t_new)

        v = v_new
        t = t_new
        n += 1
        running.advance(dissipation_rates(v, grid, params.gamma), dt)

        if n % cfg.record_every == 0 or last:
            records.append(diagnostics_from_coefficients(v, grid, params, weight, t, running))
            if fields is not None:
                fields.append(values.copy())
            logger.debug(f"t={t:.6g}: min={records[-1].min_val:.6g}, max={records[-1].max_val:.6g}")
            if monitor is not None:
                failure = monitor(series())
                if failure is not None:
                    name, margin = failure
                    logger.warning(f"Fatal check '{name}' failed at t={t:.6g} (margin {margin:.3e})")
                    return series(status="check_failed", status_time=t, failed_check=name, failed_margin=margin)
        if last:
            break

    logger.info(f"Run completed at t={t:.6g} after {n} steps, {len(records)} records.")
    return series()
