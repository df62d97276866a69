# src/models/hilbert_model.py

import logging

import numpy as np

from src.errors import InvalidFieldError
from src.models.base_model import BaseTransportModel
from src.models.params import VelocityKind
from src.operators import hilbert_symbol
from src.spectral_core import Grid

logger = logging.getLogger(__name__)

HILBERT_IDENTITY_TOLERANCE = 1e-11


class HilbertModel(BaseTransportModel):
    """
    Model A: u = H theta.

    Since d_x H = Lambda, the stretching term delta u_x theta is delta theta Lambda theta;
    every evaluation checks that identity on the non-Nyquist modes.
    """
    def __init__(self):
        super().__init__("hilbert_model")

    def velocity_symbol(self, k: np.ndarray, velocity: VelocityKind) -> np.ndarray:
        return hilbert_symbol(k)

    def check_velocity_gradient(self, u_x_hat: np.ndarray, theta_hat: np.ndarray, grid: Grid) -> None:
        paired = np.ones(grid.n_points, dtype=bool)
        paired[grid.nyquist_position] = False
        lambda_theta_hat = np.abs(grid.wavenumbers) * theta_hat
        defect = float(np.sum(np.abs(u_x_hat[paired] - lambda_theta_hat[paired])))
        scale = max(1.0, float(np.sum(np.abs(lambda_theta_hat))))
        if defect > HILBERT_IDENTITY_TOLERANCE * scale:
            logger.error(f"d_x(H theta) differs from Lambda theta by {defect:.3e}")
            raise InvalidFieldError(f"Hilbert identity d_x H = Lambda violated by {defect:.3e}")
