# src/models/initial_data.py

import logging
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import InitialDataError
from src.operators import mollify, wiener_window
from src.spectral_core import Field as GridField
from src.spectral_core import Grid, forward_transform

logger = logging.getLogger(__name__)


class PositiveBump(BaseModel):
    """theta0 = base + amplitude * cos(2 pi mode x / L), strictly positive."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["positive_bump"] = "positive_bump"
    base: float = Field(default=2.0, gt=0.0, allow_inf_nan=False)
    amplitude: float = Field(default=1.0, allow_inf_nan=False)
    mode: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def validate_positive(self) -> "PositiveBump":
        if self.base <= abs(self.amplitude):
            raise ValueError(f"positive_bump needs base > |amplitude|, got base={self.base}, amplitude={self.amplitude}")
        return self


class Gaussian(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    center: float = Field(default=0.0, allow_inf_nan=False)
    width: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    height: float = Field(default=1.0, allow_inf_nan=False)


class TrigPolynomial(BaseModel):
    """Random trigonometric polynomial of the given degree, rescaled to a prescribed A^0 norm."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["trig_polynomial"] = "trig_polynomial"
    seed: int = Field(default=0, ge=0)
    degree: int = Field(default=5, ge=0)
    target_a0: float = Field(default=0.2, gt=0.0, allow_inf_nan=False)


class SlowDecay(BaseModel):
    """theta0 = (1 + x^2)^(-eta/2), an infinite-energy profile on the line."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["slow_decay"] = "slow_decay"
    eta: float = Field(default=0.3, gt=0.0, allow_inf_nan=False)


class Zero(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["zero"] = "zero"


InitialKind = Annotated[
    Union[PositiveBump, Gaussian, TrigPolynomial, SlowDecay, Zero],
    Field(discriminator="kind"),
]


class InitialDataSpec(BaseModel):
    """
    Recipe for theta0: a profile, optional smoothing, and an optional
    perturbation eta * cos(2 pi x / L) / ||cos(2 pi x / L)||_{L^2} of L^2 size eta.
    """
    model_config = ConfigDict(frozen=True)

    shape: InitialKind = Field(default_factory=PositiveBump)
    mollify_eps: Optional[float] = Field(default=None, gt=0.0)
    window_eps: Optional[float] = Field(default=None, gt=0.0)
    perturbation_eta: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)


def _profile(shape, grid: Grid) -> np.ndarray:
    x = grid.nodes
    if isinstance(shape, PositiveBump):
        return shape.base + shape.amplitude * np.cos(2.0 * np.pi * shape.mode * x / grid.domain_length)
    if isinstance(shape, Gaussian):
        return shape.height * np.exp(-((x - shape.center) / shape.width) ** 2)
    if isinstance(shape, SlowDecay):
        return (1.0 + x * x) ** (-0.5 * shape.eta)
    if isinstance(shape, TrigPolynomial):
        rng = np.random.default_rng(shape.seed)
        values = np.full(grid.n_points, rng.standard_normal())
        for j in range(1, shape.degree + 1):
            a, b = rng.standard_normal(2)
            phase = 2.0 * np.pi * j * x / grid.domain_length
            values += a * np.cos(phase) + b * np.sin(phase)
        return values
    return np.zeros(grid.n_points)


def a0_norm(theta: GridField) -> float:
    """Discrete Wiener norm sum_j |c_j|."""
    return float(np.sum(np.abs(forward_transform(theta).coefficients)))


def make_initial_data(spec: InitialDataSpec, grid: Grid) -> GridField:
    """
    Build theta0 on ``grid``.

    Order of operations: profile, mollification, Wiener window, A^0
    rescaling (TrigPolynomial only), perturbation.

    Raises:
        InitialDataError: If a TrigPolynomial has zero A^0 norm before rescaling
    """
    shape = spec.shape
    theta = GridField.from_values(_profile(shape, grid), grid)

    if spec.mollify_eps is not None:
        theta = mollify(theta, spec.mollify_eps)
    if spec.window_eps is not None:
        theta = wiener_window(theta, spec.window_eps)

    if isinstance(shape, TrigPolynomial):
        current = a0_norm(theta)
        if current == 0.0:
            raise InitialDataError("Cannot rescale a zero trigonometric polynomial to a nonzero A^0 norm")
        theta = theta.scaled(shape.target_a0 / current)

    if isinstance(shape, SlowDecay):
        logger.info(
            f"SlowDecay data truncated to the periodic cell; edge value {theta.values[0]:.3e}"
        )

    if spec.perturbation_eta > 0.0:
        direction = np.cos(2.0 * np.pi * grid.nodes / grid.domain_length)
        direction /= np.sqrt(0.5 * grid.domain_length)
        theta = GridField.from_values(theta.values + spec.perturbation_eta * direction, grid)

    return theta
