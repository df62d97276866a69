"""
Norms, weights and identities evaluated on fields.

Conventions: integrals are Riemann sums dx * sum over the nodes; Fourier-side
norms use the series coefficients c_j of spectral_core, so that
||f||_{L^2}^2 = L * sum |c_j|^2 and the discrete Wiener norm is
||f||_{A^0} = sum |c_j| (which dominates max |f| with constant 1).
"""

import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import ParameterError
from src.littlewood_bridge import decompose
from src.model_engine import model_for
from src.models.params import ModelParams
from src.operators import (
    derivative,
    derivative_symbol,
    fractional_power,
    hilbert_symbol,
    power_symbol,
    second_derivative,
    symbol_array,
)
from src.spectral_core import Field as GridField
from src.spectral_core import Grid, dealiased_product, forward_transform, product_coefficients, to_values

logger = logging.getLogger(__name__)

WEIGHTED_ORDERS = (0.0, 0.5, 1.0, 1.5, 2.0)


class WeightParams(BaseModel):
    """Exponent of the Muckenhoupt weight w_beta(x) = (1 + x^2)^(-beta/2)."""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(default=0.5, gt=0.0, lt=1.0)


# =============================================================================
# Plain norms
# =============================================================================


def lp_norm(f: GridField, p: float) -> float:
    """(dx * sum |f|^p)^(1/p); p = inf gives max |f|."""
    if not p >= 1.0:
        raise ParameterError(f"lp_norm needs p >= 1, got {p}")
    magnitude = np.abs(f.values)
    if np.isinf(p):
        return float(np.max(magnitude))
    return float((f.grid.dx * np.sum(magnitude ** p)) ** (1.0 / p))


def _seminorm_squared(c: np.ndarray, grid: Grid, s: float) -> float:
    return float(grid.domain_length * np.sum(np.abs(grid.wavenumbers) ** (2.0 * s) * np.abs(c) ** 2))


def sobolev_seminorm(f: GridField, s: float) -> float:
    """(L * sum |k_j|^(2s) |c_j|^2)^(1/2)."""
    if not s >= 0.0:
        raise ParameterError(f"sobolev_seminorm needs s >= 0, got {s}")
    return float(np.sqrt(_seminorm_squared(forward_transform(f).coefficients, f.grid, s)))


def _wiener(c: np.ndarray, grid: Grid, alpha: float) -> float:
    return float(np.sum(np.abs(grid.wavenumbers) ** alpha * np.abs(c)))


def wiener_norm(f: GridField, alpha: float, homogeneous: bool = True) -> float:
    """
    Discrete Wiener norm.

    Homogeneous: sum |k_j|^alpha |c_j| (alpha = 0 gives A^0 = sum |c_j|).
    Inhomogeneous: A^0 plus the homogeneous part for alpha > 0.
    """
    if not alpha >= 0.0:
        raise ParameterError(f"wiener_norm needs alpha >= 0, got {alpha}")
    c = forward_transform(f).coefficients
    homogeneous_part = _wiener(c, f.grid, alpha)
    if homogeneous or alpha == 0.0:
        return homogeneous_part
    return _wiener(c, f.grid, 0.0) + homogeneous_part


# =============================================================================
# Weights
# =============================================================================


def weight_values(weight: WeightParams, grid: Grid) -> np.ndarray:
    x = grid.nodes
    return (1.0 + x * x) ** (-0.5 * weight.beta)


def weight_field(weight: WeightParams, grid: Grid) -> GridField:
    """Samples of w_beta; 0 < w_beta <= 1 with w_beta(0) = 1."""
    return GridField.from_values(weight_values(weight, grid), grid)


def weight_derivative_constant(weight: WeightParams, grid: Grid) -> float:
    """max |w_beta'| / w_beta from the closed form beta |x| / (1 + x^2)."""
    x = grid.nodes
    return float(np.max(weight.beta * np.abs(x) / (1.0 + x * x)))


def weight_operator_constant(weight: WeightParams, grid: Grid, s: float) -> float:
    """Measured max |Lambda^s w_beta| / w_beta on the grid."""
    w = weight_field(weight, grid)
    return float(np.max(np.abs(fractional_power(w, s).values) / w.values))


def _weighted_l2_squared(values: np.ndarray, w: np.ndarray, dx: float) -> float:
    return float(dx * np.sum(values * values * w))


def weighted_sobolev_norm(f: GridField, s: float, weight: WeightParams) -> float:
    """
    ||f||_{H^s(w dx)} for s in {0, 1/2, 1, 3/2, 2}.

    s = 0 is (dx * sum f^2 w)^(1/2). Otherwise the weighted L^2 norms of f and
    D f are combined in quadrature, with D = d_x for s = 1, d_xx for s = 2 and
    Lambda^s for the half-integer orders.

    Raises:
        ParameterError: If s is not a supported order
    """
    if s not in WEIGHTED_ORDERS:
        raise ParameterError(f"weighted_sobolev_norm supports s in {WEIGHTED_ORDERS}, got {s}")
    w = weight_values(weight, f.grid)
    total = _weighted_l2_squared(f.values, w, f.grid.dx)
    if s == 0.0:
        return float(np.sqrt(total))
    if s == 1.0:
        top = derivative(f)
    elif s == 2.0:
        top = second_derivative(f)
    else:
        top = fractional_power(f, s)
    return float(np.sqrt(total + _weighted_l2_squared(top.values, w, f.grid.dx)))


def weighted_interpolation_ratio(f: GridField, weight: WeightParams) -> float:
    """
    ||Lambda^(1/2) f||_{L^2(w)} / (||f||_{L^2(w)}^(1/2) ||Lambda f||_{L^2(w)}^(1/2)),
    the measured constant of the weighted Gagliardo-Nirenberg inequality.
    Zero when the denominator vanishes.
    """
    w = weight_values(weight, f.grid)
    dx = f.grid.dx
    numerator = np.sqrt(_weighted_l2_squared(fractional_power(f, 0.5).values, w, dx))
    denominator = (_weighted_l2_squared(f.values, w, dx) * _weighted_l2_squared(fractional_power(f, 1.0).values, w, dx)) ** 0.25
    if denominator == 0.0:
        return 0.0
    return float(numerator / denominator)


def _weighted_norms(c: np.ndarray, values: np.ndarray, grid: Grid, w: np.ndarray) -> Dict[str, float]:
    k = grid.wavenumbers
    dx = grid.dx
    base = _weighted_l2_squared(values, w, dx)
    half = _weighted_l2_squared(to_values(symbol_array(grid, power_symbol(0.5)) * c, grid), w, dx)
    one = _weighted_l2_squared(to_values(symbol_array(grid, derivative_symbol) * c, grid), w, dx)
    two = _weighted_l2_squared(to_values(-(k * k) * c, grid), w, dx)
    return {
        "w_l2": np.sqrt(base),
        "w_h_half": np.sqrt(base + half),
        "w_h1": np.sqrt(base + one),
        "w_h2": np.sqrt(base + two),
    }


# =============================================================================
# Identities and pointwise inequalities
# =============================================================================


def _hilbert_identity_residual(c: np.ndarray, grid: Grid) -> float:
    k = grid.wavenumbers
    ik = symbol_array(grid, derivative_symbol)
    h = symbol_array(grid, hilbert_symbol)
    f_x = ik * c
    hf_x = h * f_x
    lambda_f = np.abs(k) * c
    lhs = h * product_coefficients(f_x, hf_x, grid)
    rhs = 0.5 * (product_coefficients(lambda_f, lambda_f, grid) - product_coefficients(f_x, f_x, grid))
    return float(np.max(np.abs(to_values(lhs - rhs, grid))))


def hilbert_identity_residual(f: GridField) -> float:
    """max |H(f_x H f_x) - 1/2 [(Lambda f)^2 - (f_x)^2]| with dealiased products."""
    return _hilbert_identity_residual(forward_transform(f).coefficients, f.grid)


def _cordoba_gap_values(c: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    power = symbol_array(grid, power_symbol(alpha))
    lambda_f = power * c
    gap = product_coefficients(c, lambda_f, grid) - 0.5 * power * product_coefficients(c, c, grid)
    return to_values(gap, grid)


def cordoba_gap(f: GridField, alpha: float) -> float:
    """min over the grid of f Lambda^alpha f - 1/2 Lambda^alpha (f^2)."""
    if not (0.0 < alpha <= 2.0):
        raise ParameterError(f"cordoba_gap needs alpha in (0, 2], got {alpha}")
    return float(np.min(_cordoba_gap_values(forward_transform(f).coefficients, f.grid, alpha)))


def cordoba_cubic_gap(f: GridField) -> float:
    """min over the grid of f^2 Lambda f - 1/3 Lambda (f^3); nonnegative for f >= 0."""
    c = forward_transform(f).coefficients
    grid = f.grid
    power = np.abs(grid.wavenumbers)
    square = product_coefficients(c, c, grid)
    gap = product_coefficients(square, power * c, grid) - power * product_coefficients(square, c, grid) / 3.0
    return float(np.min(to_values(gap, grid)))


def commutator_half(psi: GridField, f: GridField) -> GridField:
    """[Lambda^(1/2), psi] f = Lambda^(1/2)(psi f) - psi Lambda^(1/2) f."""
    first = fractional_power(dealiased_product(psi, f), 0.5)
    second = dealiased_product(psi, fractional_power(f, 0.5))
    return first - second


def commutator_ratio(psi: GridField, f: GridField, g: GridField) -> float:
    """||[Lambda^(1/2), psi](f - g)||_{L^6} / (||psi||_{W^{1,inf}} ||f - g||_{L^{3/2}})."""
    difference = f - g
    numerator = lp_norm(commutator_half(psi, difference), 6.0)
    denominator = (lp_norm(psi, np.inf) + lp_norm(derivative(psi), np.inf)) * lp_norm(difference, 1.5)
    if denominator == 0.0:
        return 0.0
    return numerator / denominator


def littlewood_paley_seminorm(f: GridField, s: float) -> float:
    """
    (sum_j 2^(2 j s) ||Delta_j f||^2)^(1/2) over sharp dyadic shells.

    Equivalent to sobolev_seminorm(f, s) within [2^-|s|, 2^|s|].
    """
    if not abs(s) < 2.0:
        raise ParameterError(f"littlewood_paley_seminorm needs |s| < 2, got {s}")
    grid = f.grid
    blocks = decompose(f, int(np.floor(np.log2(grid.k_min))))
    total = 0.0
    for j, block in blocks.blocks.items():
        total += 2.0 ** (2 * j * s) * lp_norm(block, 2.0) ** 2
    return float(np.sqrt(total))


# =============================================================================
# Diagnostics
# =============================================================================


DISSIPATION_RATES = (
    "sobolev_dissipation",
    "a1_dissipation",
    "l2_dissipation",
    "half_dissipation",
    "viscous_dissipation",
)


def dissipation_rates(c: np.ndarray, grid: Grid, gamma: float) -> np.ndarray:
    """
    Integrands of the running dissipation integrals, in DISSIPATION_RATES order:
    ||Lambda^((gamma+1)/2) theta||^2, ||theta_x||_{A^1}, ||Lambda^(gamma/2) theta||^2,
    ||Lambda^(1/2) theta||^2 and ||Lambda theta||^2 + ||Lambda^(3/2) theta||^2.
    """
    k = np.abs(grid.wavenumbers)
    energy = grid.domain_length * np.abs(c) ** 2
    magnitude = np.abs(c)
    return np.array([
        np.sum(k ** (gamma + 1.0) * energy),
        np.sum((k + k * k) * magnitude),
        np.sum(k ** gamma * energy),
        np.sum(k * energy),
        np.sum((k * k + k ** 3) * energy),
    ])


class RunningDissipation:
    """Trapezoidal accumulator for the dissipation integrals."""

    def __init__(self, initial_rates: np.ndarray):
        self._previous = np.asarray(initial_rates, dtype=float)
        self.integrals = np.zeros_like(self._previous)

    def advance(self, rates: np.ndarray, dt: float) -> None:
        rates = np.asarray(rates, dtype=float)
        self.integrals = self.integrals + 0.5 * dt * (self._previous + rates)
        self._previous = rates

    def as_dict(self) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(DISSIPATION_RATES, self.integrals)}


class DiagnosticsRecord(BaseModel):
    """
    Snapshot of every tracked functional at time t.

    The field order is the column order of the series CSV.
    """

    model_config = ConfigDict(frozen=True)

    t: float
    min_val: float
    max_val: float
    l1: float
    l2: float
    linf: float
    sobolev_half: float
    sobolev_one: float
    sobolev_dissipation_running: float
    a0: float
    a1_dot: float
    a1: float
    a1_dissipation_running: float
    w_l2: float
    w_h_half: float
    w_h1: float
    hilbert_identity_residual: float
    cordoba_min_gap: float
    mass: float
    l2_dissipation_running: float
    half_dissipation_running: float
    viscous_dissipation_running: float
    velocity_gradient_l2: float
    dissipative_l2: float
    w_h2: float
    weight_edge: float

    @classmethod
    def columns(cls) -> List[str]:
        return list(cls.model_fields.keys())


def diagnostics_from_coefficients(
    c: np.ndarray,
    grid: Grid,
    params: ModelParams,
    weight: WeightParams,
    t: float,
    running: Optional[RunningDissipation] = None,
) -> DiagnosticsRecord:
    values = to_values(c, grid)
    dx = grid.dx
    k = grid.wavenumbers
    abs_c = np.abs(c)
    w = weight_values(weight, grid)
    integrals = running.as_dict() if running is not None else {name: 0.0 for name in DISSIPATION_RATES}

    model = model_for(params.velocity)
    u_x_hat = symbol_array(grid, derivative_symbol) * model.velocity_coefficients(c, grid, params.velocity)

    a0 = float(np.sum(abs_c))
    a1_dot = float(np.sum(np.abs(k) * abs_c))
    return DiagnosticsRecord(
        t=t,
        min_val=float(np.min(values)),
        max_val=float(np.max(values)),
        l1=float(dx * np.sum(np.abs(values))),
        l2=float(np.sqrt(dx * np.sum(values * values))),
        linf=float(np.max(np.abs(values))),
        sobolev_half=float(np.sqrt(_seminorm_squared(c, grid, 0.5))),
        sobolev_one=float(np.sqrt(_seminorm_squared(c, grid, 1.0))),
        sobolev_dissipation_running=integrals["sobolev_dissipation"],
        a0=a0,
        a1_dot=a1_dot,
        a1=a0 + a1_dot,
        a1_dissipation_running=integrals["a1_dissipation"],
        hilbert_identity_residual=_hilbert_identity_residual(c, grid),
        cordoba_min_gap=float(np.min(_cordoba_gap_values(c, grid, params.gamma))),
        mass=float(dx * np.sum(values)),
        l2_dissipation_running=integrals["l2_dissipation"],
        half_dissipation_running=integrals["half_dissipation"],
        viscous_dissipation_running=integrals["viscous_dissipation"],
        velocity_gradient_l2=float(np.sqrt(grid.domain_length * np.sum(np.abs(u_x_hat) ** 2))),
        dissipative_l2=float(np.sqrt(_seminorm_squared(c, grid, 0.5 * params.gamma))),
        weight_edge=float(w[0]),
        **_weighted_norms(c, values, grid, w),
    )


def diagnostics(
    theta: GridField,
    params: ModelParams,
    weight: WeightParams,
    t: float = 0.0,
    running: Optional[RunningDissipation] = None,
) -> DiagnosticsRecord:
    """DiagnosticsRecord of ``theta`` at time ``t``."""
    return diagnostics_from_coefficients(forward_transform(theta).coefficients, theta.grid, params, weight, t, running)
