"""
Nonlocal operators realized as Fourier multipliers.

Every operator here maps a Field to a Field through its symbol:

    hilbert               -i sgn(k)
    fractional_laplacian  |k|^gamma, gamma in (0, 2]
    bessel_potential      (1 + k^2)^(-alpha)
    derivative            i k
    heat_semigroup        exp(-tau k^2)

plus the two smoothing maps used to prepare initial data (``mollify`` and
``wiener_window``) and a quadrature realization of Lambda = Lambda^1 that does
not go through the FFT.
"""

import logging

import numpy as np

from src.errors import OracleSizeError, ParameterError
from src.spectral_core import (
    Field,
    Grid,
    apply_multiplier,
    forward_transform,
    inverse_transform,
    multiplier_values,
)

logger = logging.getLogger(__name__)

QUADRATURE_MAX_POINTS = 1024
# energy fraction allowed outside |j| <= N/4 before the oracle warns
_QUADRATURE_BAND_ENERGY = 1e-24


# --- Symbols ---

def hilbert_symbol(k: np.ndarray) -> np.ndarray:
    return -1j * np.sign(k)


def derivative_symbol(k: np.ndarray) -> np.ndarray:
    return 1j * k


def power_symbol(s: float):
    def symbol(k: np.ndarray) -> np.ndarray:
        return np.abs(k) ** s
    return symbol


def bessel_symbol(alpha: float):
    def symbol(k: np.ndarray) -> np.ndarray:
        return (1.0 + k * k) ** (-alpha)
    return symbol


def heat_symbol(tau: float):
    def symbol(k: np.ndarray) -> np.ndarray:
        return np.exp(-tau * k * k)
    return symbol


def _apply(f: Field, symbol) -> Field:
    return inverse_transform(apply_multiplier(forward_transform(f), symbol))


def symbol_array(grid: Grid, symbol) -> np.ndarray:
    """Multiplier values on ``grid`` (Nyquist rule included), for coefficient-space code."""
    return multiplier_values(grid, symbol)


# --- Operators ---

def hilbert(f: Field) -> Field:
    """Hilbert transform; annihilates the mean and the Nyquist mode."""
    return _apply(f, hilbert_symbol)


def fractional_laplacian(f: Field, gamma: float) -> Field:
    """
    Lambda^gamma f with symbol |k|^gamma.

    Raises:
        ParameterError: If gamma is outside (0, 2]
    """
    if not (0.0 < gamma <= 2.0):
        raise ParameterError(f"fractional_laplacian needs gamma in (0, 2], got {gamma}")
    return _apply(f, power_symbol(gamma))


def fractional_power(f: Field, s: float) -> Field:
    """Lambda^s for any s >= 0 (s = 0 is the identity)."""
    if not (np.isfinite(s) and s >= 0.0):
        raise ParameterError(f"fractional_power needs a finite s >= 0, got {s}")
    return _apply(f, power_symbol(s))


def bessel_potential(f: Field, alpha: float) -> Field:
    if not (np.isfinite(alpha) and alpha >= 0.0):
        raise ParameterError(f"bessel_potential needs a finite alpha >= 0, got {alpha}")
    if alpha == 0.0:
        return f
    return _apply(f, bessel_symbol(alpha))


def derivative(f: Field) -> Field:
    return _apply(f, derivative_symbol)


def second_derivative(f: Field) -> Field:
    return _apply(f, lambda k: -k * k)


def heat_semigroup(f: Field, tau: float) -> Field:
    if not (np.isfinite(tau) and tau >= 0.0):
        raise ParameterError(f"heat_semigroup needs a finite tau >= 0, got {tau}")
    if tau == 0.0:
        return f
    return _apply(f, heat_symbol(tau))


def mollify(f: Field, epsilon: float) -> Field:
    """Gaussian mollification, realized as the heat semigroup at tau = epsilon^2 / 2."""
    if not epsilon > 0.0:
        raise ParameterError(f"mollify needs epsilon > 0, got {epsilon}")
    return heat_semigroup(f, 0.5 * epsilon * epsilon)


def gaussian_window(grid: Grid, epsilon: float) -> np.ndarray:
    """Samples of g(x) = exp(-epsilon x^2) on the cell."""
    x = grid.nodes
    return np.exp(-epsilon * x * x)


def wiener_window(f: Field, epsilon: float) -> Field:
    """
    g_eps * exp(eps d_xx) f with g_eps(x) = exp(-eps x^2).

    x is the cell-centered coordinate; when g_eps is not negligible at
    x = +-L/2 the window sees the periodic truncation.
    """
    if not epsilon > 0.0:
        raise ParameterError(f"wiener_window needs epsilon > 0, got {epsilon}")
    window = gaussian_window(f.grid, epsilon)
    if window[0] > 1e-8:
        logger.warning(
            f"Gaussian window is {window[0]:.2e} at the cell edge; result is affected by periodic truncation."
        )
    smoothed = heat_semigroup(f, epsilon)
    return Field.from_values(window * smoothed.values, f.grid)


# --- Quadrature oracle ---

def _periodized_kernel_sum(values: np.ndarray, length: float) -> np.ndarray:
    """
    Trapezoidal sum of (1/pi) p.v. int (f(x) - f(y)) / (x - y)^2 dy with the
    kernel periodized to (pi/L)^2 / sin^2(pi (x - y) / L).

    On mode p this has symbol |k| (1 - |p|/n); the node x = y is omitted,
    which is the symmetric-difference principal value.
    """
    n = values.size
    offsets = np.arange(1, n)
    weights = 1.0 / np.sin(np.pi * offsets / n) ** 2
    neighbours = (np.arange(n)[:, None] + offsets[None, :]) % n
    differences = values[:, None] - values[neighbours]
    prefactor = np.pi * (length / n) / length ** 2
    return prefactor * (differences @ weights)


def lambda_quadrature_oracle(f: Field) -> Field:
    """
    Lambda f computed from the singular-integral form instead of the symbol.

    The plain trapezoidal sum is exact up to the factor (1 - |p|/N); a
    Richardson combination with the two interleaved half grids removes it,
    so the result matches the spectral Lambda on fields band-limited to
    |j| <= N/4.

    Raises:
        OracleSizeError: If N exceeds 1024
    """
    grid = f.grid
    n = grid.n_points
    if n > QUADRATURE_MAX_POINTS:
        raise OracleSizeError(f"lambda_quadrature_oracle is limited to N <= {QUADRATURE_MAX_POINTS}, got N={n}")

    coefficients = forward_transform(f).coefficients
    energy = np.abs(coefficients) ** 2
    outside = float(np.sum(energy[4 * np.abs(grid.mode_index) > n]))
    if outside > _QUADRATURE_BAND_ENERGY * max(float(np.sum(energy)), np.finfo(float).tiny):
        logger.warning(
            f"Quadrature oracle: field carries energy {outside:.2e} beyond |j| = N/4; agreement with the spectral path is degraded."
        )

    values = f.values
    fine = _periodized_kernel_sum(values, grid.domain_length)
    result = 2.0 * fine
    result[0::2] -= _periodized_kernel_sum(values[0::2], grid.domain_length)
    result[1::2] -= _periodized_kernel_sum(values[1::2], grid.domain_length)
    return Field.from_values(result, grid)
