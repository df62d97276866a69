# src/model_engine.py

import importlib
import logging
from functools import lru_cache
from typing import Tuple, Type, get_args

import numpy as np

from src.errors import BlowUpError
from src.models.base_model import BaseTransportModel
from src.models.params import ModelParams, VelocityKind
from src.spectral_core import Field, forward_transform, to_values

logger = logging.getLogger(__name__)


VELOCITY_KINDS: Tuple[str, ...] = get_args(VelocityKind.model_fields["kind"].annotation)


@lru_cache(maxsize=None)
def load_transport_model(model_name: str) -> BaseTransportModel:
    """
    Imports src/models/<kind>_model.py and instantiates its <Kind>Model class.

    Raises:
        ValueError: If ``model_name`` does not name the model of a velocity
            kind, or the module lacks a BaseTransportModel subclass of the
            expected name.
    """
    kind = model_name[: -len("_model")] if model_name.endswith("_model") else model_name
    if kind not in VELOCITY_KINDS:
        known = ", ".join(f"'{k}' ({k}_model)" for k in VELOCITY_KINDS)
        logger.error(f"No transport model for '{model_name}'; velocity kinds are {known}.")
        raise ValueError(f"Transport model '{model_name}' not found: velocity kind must be one of {known}.")

    # 'bessel' -> src.models.bessel_model.BesselModel
    class_name = f"{kind.capitalize()}Model"
    module_path = f"src.models.{kind}_model"
    try:
        model_class: Type[BaseTransportModel] = getattr(importlib.import_module(module_path), class_name)
    except (ImportError, AttributeError):
        logger.error(f"Velocity kind '{kind}' needs a class '{class_name}' in '{module_path}'.", exc_info=True)
        raise ValueError(f"Transport model for velocity kind '{kind}' not found: expected {module_path}.{class_name}.")
    if not (isinstance(model_class, type) and issubclass(model_class, BaseTransportModel)):
        raise ValueError(f"{module_path}.{class_name} is not a transport model for velocity kind '{kind}'.")
    logger.debug(f"Loaded transport model '{class_name}' for velocity kind '{kind}'.")
    return model_class()


def model_for(velocity: VelocityKind) -> BaseTransportModel:
    return load_transport_model(velocity.model_name)


def velocity_field(theta: Field, velocity: VelocityKind) -> Field:
    """u = H theta or u = (1 - d_xx)^(-alpha) theta."""
    model = model_for(velocity)
    u_hat = model.velocity_coefficients(forward_transform(theta).coefficients, theta.grid, velocity)
    return Field.from_values(to_values(u_hat, theta.grid), theta.grid)


def rhs(theta: Field, params: ModelParams, t: float = 0.0) -> Field:
    """
    -u theta_x - delta u_x theta - nu Lambda^gamma theta + eps theta_xx.

    Raises:
        BlowUpError: If the result is not finite; carries ``t``.
    """
    model = model_for(params.velocity)
    grid = theta.grid
    values = to_values(model.rhs_coefficients(forward_transform(theta).coefficients, grid, params), grid)
    if not np.all(np.isfinite(values)):
        logger.error(f"Non-finite right-hand side at t={t:.6g}")
        raise BlowUpError(t)
    return Field.from_values(values, grid)
