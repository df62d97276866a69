"""
Inequality and principle checks evaluated over a TimeSeries.

Each check returns an EstimateVerdict. Margins are relative slack
(RHS - LHS) / RHS unless stated otherwise, so a verdict holds iff
worst_margin >= -tolerance. Checks whose hypotheses are not met return
applicable=False and assert nothing.

Wiener-space thresholds use the discrete series convention
||f||_{A^0} = sum |c_j|, in which ||fg||_{A^0} <= ||f||_{A^0} ||g||_{A^0}
holds with constant 1; the small-data threshold for model A is then
nu / (2 (1 + |delta|)).
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from src.functionals import WeightParams
from src.models.params import ModelParams, critical_alpha
from src.operators import bessel_symbol
from src.spectral_core import Field as GridField
from src.spectral_core import Grid
from src.timestepper import TimeSeries

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny
EARLY_FRACTION = 0.1


class EstimateVerdict(BaseModel):
    """Outcome of one check; ``holds`` is meaningful only when ``applicable``."""

    model_config = ConfigDict(frozen=True)

    name: str
    holds: bool
    worst_margin: float
    tolerance: float
    applicable: bool = True
    details: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_consistency(self) -> "EstimateVerdict":
        if self.applicable and self.holds and self.worst_margin < -self.tolerance:
            raise ValueError(f"verdict '{self.name}' holds with margin {self.worst_margin} below -{self.tolerance}")
        return self

    @property
    def holds_label(self) -> str:
        if not self.applicable:
            return "not_asserted"
        return "true" if self.holds else "false"

    @property
    def failed(self) -> bool:
        return self.applicable and not self.holds


def _verdict(name: str, margin: float, tolerance: float, details: Optional[Dict[str, float]] = None) -> EstimateVerdict:
    margin = float(margin)
    holds = bool(np.isfinite(margin) and margin >= -tolerance)
    if not holds:
        logger.warning(f"Check '{name}' fails: worst margin {margin:.3e}, tolerance {tolerance:.1e}")
    return EstimateVerdict(name=name, holds=holds, worst_margin=margin, tolerance=tolerance, details=details or {})


def _not_applicable(name: str, tolerance: float, reason: str) -> EstimateVerdict:
    logger.info(f"Check '{name}' not asserted: {reason}")
    return EstimateVerdict(name=name, holds=False, worst_margin=float("nan"), tolerance=tolerance, applicable=False)


def _relative(rhs: float, lhs: np.ndarray) -> np.ndarray:
    return (rhs - lhs) / max(abs(rhs), _TINY)


def _later(values: np.ndarray) -> np.ndarray:
    """Entries after t = 0; the initial record is an equality by construction."""
    return values[1:] if values.size > 1 else values


# =============================================================================
# Principles and a priori bounds
# =============================================================================


def check_min_max(series: TimeSeries, theta0: Optional[GridField], params: ModelParams, tolerance: Optional[float] = None) -> EstimateVerdict:
    """
    Model A (delta >= 0, theta0 >= 0): min theta >= min(0, min theta0) - tol and
    max theta <= max theta0 + tol. Model B: ||theta||_inf <= ||theta0||_inf + tol.
    tol defaults to 1e-6 ||theta0||_inf.
    """
    name = "min_max"
    if theta0 is not None:
        initial_min, initial_max = float(np.min(theta0.values)), float(np.max(theta0.values))
        initial_sup = theta0.max_abs()
    else:
        first = series.records[0]
        initial_min, initial_max, initial_sup = first.min_val, first.max_val, first.linf
    tol = 1e-6 * initial_sup if tolerance is None else tolerance

    if params.is_hilbert:
        if params.delta < 0.0:
            return _not_applicable(name, tol, f"delta={params.delta} < 0")
        if initial_min < 0.0:
            return _not_applicable(name, tol, "theta0 changes sign")
        lower = min(0.0, initial_min)
        minimum_slack = series.column("min_val") - lower
        maximum_slack = initial_max - series.column("max_val")
        margin = min(float(np.min(minimum_slack)), float(np.min(maximum_slack)))
    else:
        margin = float(np.min(initial_sup - series.column("linf")))
    return _verdict(name, margin, tol, {"initial_min": initial_min, "initial_max": initial_max})


def check_energy(series: TimeSeries, params: ModelParams, tolerance: float = 1e-4) -> EstimateVerdict:
    """
    ||theta||_{H^1/2}^2 + 2 nu int ||Lambda^(gamma/2) theta||_{H^1/2}^2
      + 2 eps int (||Lambda theta||^2 + ||Lambda^(3/2) theta||^2) <= ||theta0||_{H^1/2}^2 (1 + tol).
    Model A with theta0 >= 0 and delta >= 1/2.
    """
    name = "energy"
    first = series.records[0]
    if not params.is_hilbert:
        return _not_applicable(name, tolerance, "energy inequality is stated for the Hilbert velocity")
    if params.delta < 0.5:
        return _not_applicable(name, tolerance, f"delta={params.delta} < 1/2")
    if first.min_val < 0.0:
        return _not_applicable(name, tolerance, "theta0 changes sign")

    h_half = series.column("l2") ** 2 + series.column("sobolev_half") ** 2
    dissipated = 2.0 * params.nu * (series.column("l2_dissipation_running") + series.column("sobolev_dissipation_running"))
    viscous = 2.0 * params.epsilon_visc * series.column("viscous_dissipation_running")
    margins = _relative(h_half[0], h_half + dissipated + viscous)
    return _verdict(name, np.min(_later(margins)), tolerance, {"initial_h_half_squared": float(h_half[0])})


def check_mass_identity(series: TimeSeries, params: ModelParams, tolerance: float = 1e-6) -> EstimateVerdict:
    """
    |int theta(t) - int theta0 - (1 - delta) int_0^t ||Lambda^(1/2) theta||^2| <= tol.
    Model A, theta0 >= 0, eps = 0. The margin is minus the largest residual.
    """
    name = "mass_identity"
    if not params.is_hilbert:
        return _not_applicable(name, tolerance, "mass identity is stated for the Hilbert velocity")
    if params.epsilon_visc != 0.0:
        return _not_applicable(name, tolerance, f"epsilon_visc={params.epsilon_visc} != 0")
    if series.records[0].min_val < 0.0:
        return _not_applicable(name, tolerance, "theta0 changes sign")
    mass = series.column("mass")
    residual = mass - mass[0] - (1.0 - params.delta) * series.column("half_dissipation_running")
    worst = float(np.max(np.abs(residual)))
    return _verdict(name, -worst, tolerance, {"max_residual": worst})


def wiener_threshold(params: ModelParams) -> float:
    """Discrete-convention smallness threshold on ||theta0||_{A^0}."""
    return params.nu / (2.0 * (1.0 + abs(params.delta)))


def check_wiener_decay(series: TimeSeries, params: ModelParams, tolerance: float = 1e-3) -> EstimateVerdict:
    """
    gamma = 1 and ||theta0||_{A^0} below ``wiener_threshold``:
    (a) ||theta(t)||_{A^1} is nonincreasing, and
    (b) ||theta(t)||_{A^1} + (nu - 2 (1 + |delta|) ||theta0||_{A^0}) int ||theta_x||_{A^1}
        <= ||theta0||_{A^1} (1 + tol).
    """
    name = "wiener_decay"
    if params.gamma != 1.0:
        return _not_applicable(name, tolerance, f"gamma={params.gamma} != 1")
    a0_initial = series.records[0].a0
    threshold = wiener_threshold(params)
    if not a0_initial < threshold:
        return _not_applicable(name, tolerance, f"||theta0||_A0 = {a0_initial:.4g} >= {threshold:.4g}")

    a1 = series.column("a1")
    prefactor = params.nu - 2.0 * (1.0 + abs(params.delta)) * a0_initial
    lhs = a1 + prefactor * series.column("a1_dissipation_running")
    integral_margin = float(np.min(_later(_relative(a1[0], lhs))))
    scale = max(a1[0], _TINY)
    monotone_margin = float(np.min(a1[:-1] - a1[1:]) / scale) if a1.size > 1 else 0.0
    return _verdict(
        name,
        min(integral_margin, monotone_margin),
        tolerance,
        {"integral_margin": integral_margin, "monotone_margin": monotone_margin, "threshold": threshold, "prefactor": prefactor},
    )


# =============================================================================
# Growth and stability proxies
# =============================================================================


def _log_slopes(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.diff(np.log(values)) / np.diff(times)


def _early_count(n_intervals: int) -> int:
    return max(1, int(math.ceil(EARLY_FRACTION * n_intervals)))


def growth_margins(times: np.ndarray, norm_squared: np.ndarray) -> Tuple[float, float, float]:
    """
    (C_hat, envelope margin, slope margin) for the log of a norm.

    C_hat is the largest one-record log-slope over the first 10% of the
    records and C_plus = max(C_hat, 0). The envelope margin is the minimum of
    C_plus (t - t_0) - log(n(t) / n(t_0)) over the records after t_0. The
    slope margin is the minimum of 2 C_plus - slope over the later slopes
    that end above the starting value, and +inf when there are none.
    """
    slopes = _log_slopes(times, norm_squared)
    if slopes.size == 0:
        return 0.0, 0.0, float("inf")
    early = _early_count(slopes.size)
    c_hat = float(np.max(slopes[:early]))
    growth = max(c_hat, 0.0)
    log_ratio = np.log(norm_squared / norm_squared[0])
    envelope = float(np.min(growth * (times[1:] - times[0]) - log_ratio[1:]))
    later = slopes[early:][log_ratio[early + 1:] > 0.0]
    slope = float(np.min(2.0 * growth - later)) if later.size else float("inf")
    return c_hat, envelope, slope


def slope_stability(times: np.ndarray, norm_squared: np.ndarray) -> Tuple[float, float]:
    """(C_hat, margin) with margin = min(envelope margin, slope margin) of ``growth_margins``."""
    c_hat, envelope, slope = growth_margins(times, norm_squared)
    return c_hat, min(envelope, slope)


def check_weighted_growth(series: TimeSeries, params: ModelParams, weight: Optional[WeightParams] = None, tolerance: float = 1e-3) -> EstimateVerdict:
    """
    At-most-exponential growth of ||theta||^2 in a weighted Sobolev norm:
    log ||theta(t)||^2 <= log ||theta0||^2 + max(C_hat, 0) t + tol at every
    record, and while the norm is above its start no later slope exceeds
    2 max(C_hat, 0) + tol (see ``growth_margins``).

    Model A, gamma = 1: H^1/2(w), with ||theta0||_inf < 1/(100 (1 + delta)).
    Model A, 1 < gamma <= 2: H^1(w). Model B: H^1(w).
    Model A, gamma < 1: H^2(w) is monitored and the time it stays finite is
    reported as t_star; nothing is asserted.
    """
    name = "weighted_growth"
    weight = weight or WeightParams()
    first = series.records[0]
    details: Dict[str, float] = {"beta": weight.beta, "weight_edge": first.weight_edge}

    if params.is_hilbert and params.gamma < 1.0:
        w_h2 = series.column("w_h2")
        finite = np.isfinite(w_h2)
        t_star = float(series.times[finite][-1]) if finite.any() else 0.0
        logger.info(f"Supercritical run: weighted H^2 norm finite up to t*={t_star:.6g}")
        verdict = _not_applicable(name, tolerance, "supercritical gamma < 1: weighted H^2 norm reported only")
        return verdict.model_copy(update={"details": {**details, "t_star": t_star}})

    if params.is_hilbert and params.gamma == 1.0:
        bound = 1.0 / (100.0 * (1.0 + params.delta))
        if not first.linf < bound:
            return _not_applicable(name, tolerance, f"||theta0||_inf = {first.linf:.4g} >= {bound:.4g}")
        column = "w_h_half"
    else:
        column = "w_h1"

    norm_squared = series.column(column) ** 2
    if norm_squared[0] == 0.0 or np.any(norm_squared <= 0.0):
        return _verdict(name, 0.0, tolerance, {**details, "c_hat": 0.0})
    c_hat, envelope, slope = growth_margins(series.times, norm_squared)
    return _verdict(
        name,
        min(envelope, slope),
        tolerance,
        {**details, "c_hat": c_hat, "envelope_margin": envelope, "slope_margin": slope},
    )


def critical_multiplier_domination(grid: Grid, gamma: float) -> float:
    """
    min over the grid of max(1, |k|^(gamma/2)) - |k| (1 + k^2)^(-alpha)
    at alpha = 1/2 - gamma/4; nonnegative when the domination holds on every mode.
    """
    k = np.abs(grid.wavenumbers)
    multiplier = k * bessel_symbol(critical_alpha(gamma))(k)
    bound = np.maximum(1.0, k ** (0.5 * gamma))
    return float(np.min(bound - multiplier))


def check_critical_coupling(series: TimeSeries, params: ModelParams, tolerance: float = 1e-10) -> EstimateVerdict:
    """
    ||u_x|| <= C (||theta|| + ||Lambda^(gamma/2) theta||) at every record with
    C <= 1 and C(t) <= 2 C(0). Model B with the critical-coupling flag.
    """
    name = "critical_coupling"
    if not (params.is_bessel and params.critical_coupling):
        return _not_applicable(name, tolerance, "needs the bessel velocity with critical coupling")
    denominator = series.column("l2") + series.column("dissipative_l2")
    numerator = series.column("velocity_gradient_l2")
    ratio = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0.0)
    margin = float(np.min(1.0 - ratio))
    if ratio[0] > 0.0:
        margin = min(margin, float(np.min(2.0 * ratio[0] - ratio)))
    return _verdict(name, margin, tolerance, {"initial_constant": float(ratio[0]), "max_constant": float(np.max(ratio))})


def check_half_sobolev_decay(series: TimeSeries, params: ModelParams, tolerance: float = 1e-4) -> EstimateVerdict:
    """
    ||Lambda^(1/2) theta||^2 + 2 (nu - 2 ||theta0||_inf) int ||Lambda theta||^2 <= ||Lambda^(1/2) theta0||^2 (1 + tol).
    Model A, gamma = 1, delta >= 0, theta0 >= 0, ||theta0||_inf < nu / 2.
    """
    name = "half_sobolev_decay"
    first = series.records[0]
    if not (params.is_hilbert and params.gamma == 1.0):
        return _not_applicable(name, tolerance, "needs model A with gamma = 1")
    if params.delta < 0.0 or first.min_val < 0.0:
        return _not_applicable(name, tolerance, "needs delta >= 0 and theta0 >= 0")
    if not first.linf < 0.5 * params.nu:
        return _not_applicable(name, tolerance, f"||theta0||_inf = {first.linf:.4g} >= nu/2")
    half = series.column("sobolev_half") ** 2
    lhs = half + 2.0 * (params.nu - 2.0 * first.linf) * series.column("sobolev_dissipation_running")
    return _verdict(name, np.min(_later(_relative(half[0], lhs))), tolerance)


def two_run_stability(
    run_a: TimeSeries,
    run_b: TimeSeries,
    params: ModelParams,
    tolerance: float = 1e-3,
    determinism_tolerance: float = 1e-12,
) -> EstimateVerdict:
    """
    Continuity in the data: ||theta_1(t) - theta_2(t)|| <= eta exp(K I(t)),
    I(t) = int (||theta_1x||^2 + ||theta_2x||^2).

    K_eff(t) = log(d(t)/eta) / I(t); K_hat is its maximum over the first 10% of
    the records and every later K_eff must stay below 2 max(K_hat, 0) + tol.
    With eta = 0 the runs must agree to ``determinism_tolerance``. Both runs
    need kept fields on identical record times.
    """
    name = "two_run_stability"
    if params.gamma != 1.0:
        return _not_applicable(name, tolerance, f"gamma={params.gamma} != 1")
    if run_a.fields is None or run_b.fields is None or run_a.grid is None:
        return _not_applicable(name, tolerance, "runs were made without kept fields")
    count = min(len(run_a.fields), len(run_b.fields))
    if count == 0 or not np.array_equal(run_a.times[:count], run_b.times[:count]):
        return _not_applicable(name, tolerance, "runs have different record times")

    dx = run_a.grid.dx
    times = run_a.times[:count]
    distance = np.array([np.sqrt(dx * np.sum((a - b) ** 2)) for a, b in zip(run_a.fields[:count], run_b.fields[:count])])
    eta = float(distance[0])
    if eta == 0.0:
        worst = float(np.max(distance))
        return _verdict(name, -worst, determinism_tolerance, {"eta": 0.0, "max_distance": worst})

    gradient = run_a.column("sobolev_one")[:count] ** 2 + run_b.column("sobolev_one")[:count] ** 2
    integral = cumulative_trapezoid(gradient, times, initial=0.0)
    growth = np.log(np.maximum(distance, _TINY) / eta)
    k_eff = growth[1:] / np.maximum(integral[1:], _TINY)
    k_time = float(np.max(growth[1:] / times[1:])) if count > 1 else 0.0
    if k_eff.size == 0:
        return _verdict(name, 0.0, tolerance, {"eta": eta})
    early = _early_count(k_eff.size)
    k_hat = float(np.max(k_eff[:early]))
    later = k_eff[early:]
    margin = float(np.min(2.0 * max(k_hat, 0.0) - later)) if later.size else 0.0
    return _verdict(name, margin, tolerance, {"eta": eta, "k_hat": k_hat, "k_time": k_time, "terminal_distance": float(distance[-1])})


def perturbation_scaling(
    distance_small: float, eta_small: float, distance_large: float, eta_large: float, tolerance: float = 0.2
) -> EstimateVerdict:
    """Terminal differences scale linearly in eta: |(d_L/d_S)/(eta_L/eta_S) - 1| <= 0.2."""
    name = "perturbation_scaling"
    if distance_small <= 0.0 or eta_small <= 0.0:
        return _not_applicable(name, tolerance, "needs nonzero perturbations")
    ratio = (distance_large / distance_small) / (eta_large / eta_small)
    return _verdict(name, -abs(ratio - 1.0), tolerance, {"ratio": ratio})


def check_regularization_convergence(
    epsilons: Sequence[float], finals: Sequence[GridField], min_order: float = 0.9
) -> EstimateVerdict:
    """
    Terminal fields of an epsilon_visc sweep: pairwise L^2 gaps between
    consecutive (decreasing) epsilons decrease, and the slope of log gap
    against log epsilon is at least ``min_order``.
    """
    name = "regularization_convergence"
    if len(epsilons) < 3:
        return _not_applicable(name, 0.0, "needs at least three epsilon values")
    order_index = np.argsort(epsilons)[::-1]
    eps = np.asarray(epsilons, dtype=float)[order_index]
    fields = [finals[i] for i in order_index]
    dx = fields[0].grid.dx
    gaps = np.array([np.sqrt(dx * np.sum((a.values - b.values) ** 2)) for a, b in zip(fields, fields[1:])])
    if np.any(gaps <= 0.0):
        return _not_applicable(name, 0.0, "identical terminal fields")
    fit = linregress(np.log(eps[:-1]), np.log(gaps))
    order = float(fit.slope)
    decrease = float(np.min(gaps[:-1] - gaps[1:]) / gaps[0])
    margin = min(order - min_order, decrease)
    return _verdict(name, margin, 0.0, {"order": order, "decrease": decrease})


# =============================================================================
# Registry
# =============================================================================


SeriesCheck = Callable[[TimeSeries, ModelParams, WeightParams], EstimateVerdict]

CHECKS: Dict[str, SeriesCheck] = {
    "min_max": lambda series, params, weight: check_min_max(series, series.initial_field(), params),
    "energy": lambda series, params, weight: check_energy(series, params),
    "mass_identity": lambda series, params, weight: check_mass_identity(series, params),
    "wiener_decay": lambda series, params, weight: check_wiener_decay(series, params),
    "weighted_growth": lambda series, params, weight: check_weighted_growth(series, params, weight),
    "critical_coupling": lambda series, params, weight: check_critical_coupling(series, params),
    "half_sobolev_decay": lambda series, params, weight: check_half_sobolev_decay(series, params),
}

COMPOSITE_CHECKS = ("two_run_stability", "perturbation_scaling", "regularization_convergence")


def available_checks() -> List[str]:
    return list(CHECKS) + list(COMPOSITE_CHECKS)


def run_checks(series: TimeSeries, params: ModelParams, names: Sequence[str], weight: Optional[WeightParams] = None) -> List[EstimateVerdict]:
    """Evaluate the single-series checks in ``names``; composite names are skipped."""
    weight = weight or WeightParams()
    verdicts = []
    for name in names:
        if name in COMPOSITE_CHECKS:
            continue
        if name not in CHECKS:
            raise KeyError(f"Unknown check '{name}'. Available: {', '.join(available_checks())}")
        verdicts.append(CHECKS[name](series, params, weight))
    return verdicts
