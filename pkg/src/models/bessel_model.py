# src/models/bessel_model.py

import numpy as np

from src.models.base_model import BaseTransportModel
from src.models.params import VelocityKind
from src.operators import bessel_symbol


class BesselModel(BaseTransportModel):
    """Model B: u = (1 - d_xx)^(-alpha) theta."""
    def __init__(self):
        super().__init__("bessel_model")

    def velocity_symbol(self, k: np.ndarray, velocity: VelocityKind) -> np.ndarray:
        if velocity.alpha == 0.0:
            return np.ones_like(k)
        return bessel_symbol(velocity.alpha)(k)
