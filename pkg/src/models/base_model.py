# src/models/base_model.py

from abc import ABC, abstractmethod

import numpy as np

from src.models.params import ModelParams, VelocityKind
from src.operators import derivative_symbol, power_symbol, symbol_array
from src.spectral_core import Grid, product_coefficients


class BaseTransportModel(ABC):
    """
    Abstract Base Class for the transport models of the laboratory.
    A model fixes the velocity law u = N(theta); everything else about the
    right-hand side (products, dealiasing, dissipation) is shared here.
    All methods work on coefficient arrays in FFT order.
    """
    def __init__(self, model_name: str):
        self.model_name = model_name

    def get_model_name(self) -> str:
        """Returns the name of the model."""
        return self.model_name

    @abstractmethod
    def velocity_symbol(self, k: np.ndarray, velocity: VelocityKind) -> np.ndarray:
        """
        Fourier symbol of the velocity law.

        Args:
            k: Wavenumbers.
            velocity: The velocity kind carrying the law's parameters.
        """
        pass

    def check_velocity_gradient(self, u_x_hat: np.ndarray, theta_hat: np.ndarray, grid: Grid) -> None:
        """Hook for model-specific consistency checks on u_x; no-op by default."""
        return None

    def velocity_coefficients(self, theta_hat: np.ndarray, grid: Grid, velocity: VelocityKind) -> np.ndarray:
        return symbol_array(grid, lambda k: self.velocity_symbol(k, velocity)) * theta_hat

    def linear_symbol(self, grid: Grid, params: ModelParams) -> np.ndarray:
        """Real symbol -(nu |k|^gamma + eps k^2) of the dissipative part."""
        k = grid.wavenumbers
        return -(params.nu * np.abs(k) ** params.gamma + params.epsilon_visc * k * k)

    def nonlinear_coefficients(self, theta_hat: np.ndarray, grid: Grid, params: ModelParams) -> np.ndarray:
        """
        Coefficients of -u theta_x - delta u_x theta, every product dealiased.

        Returns zeros when the nonlinearity is switched off.
        """
        if not params.nonlinear:
            return np.zeros_like(theta_hat)
        ik = symbol_array(grid, derivative_symbol)
        u_hat = self.velocity_coefficients(theta_hat, grid, params.velocity)
        u_x_hat = ik * u_hat
        self.check_velocity_gradient(u_x_hat, theta_hat, grid)

        if params.divergence_form:
            flux = product_coefficients(u_hat, theta_hat, grid)
            source = product_coefficients(u_x_hat, theta_hat, grid)
            return -ik * flux + (1.0 - params.delta) * source

        theta_x_hat = ik * theta_hat
        advection = product_coefficients(u_hat, theta_x_hat, grid)
        stretching = product_coefficients(u_x_hat, theta_hat, grid)
        return -advection - params.delta * stretching

    def rhs_coefficients(self, theta_hat: np.ndarray, grid: Grid, params: ModelParams) -> np.ndarray:
        return self.nonlinear_coefficients(theta_hat, grid, params) + self.linear_symbol(grid, params) * theta_hat

    @staticmethod
    def dissipation_coefficients(theta_hat: np.ndarray, grid: Grid, gamma: float) -> np.ndarray:
        """Lambda^gamma theta in coefficient space."""
        return symbol_array(grid, power_symbol(gamma)) * theta_hat
