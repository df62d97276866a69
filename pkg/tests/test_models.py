"""
Tests for model parameters, initial data and the right-hand side assembly.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import BlowUpError, InitialDataError
from src.model_engine import VELOCITY_KINDS, load_transport_model, rhs, velocity_field
from src.models.base_model import BaseTransportModel
from src.models.bessel_model import BesselModel
from src.models.hilbert_model import HilbertModel
from src.models.initial_data import (
    Gaussian,
    InitialDataSpec,
    PositiveBump,
    SlowDecay,
    TrigPolynomial,
    Zero,
    a0_norm,
    make_initial_data,
)
from src.models.params import ModelParams, VelocityKind, critical_alpha
from src.spectral_core import Field


class TestModelParams:
    def test_critical_alpha(self):
        assert critical_alpha(1.0) == 0.25
        assert critical_alpha(2.0) == 0.0

    @pytest.mark.parametrize("gamma", [0.0, -0.5, 2.5])
    def test_gamma_range(self, gamma):
        with pytest.raises(ValidationError):
            ModelParams(gamma=gamma)

    def test_negative_viscosity_rejected(self):
        with pytest.raises(ValidationError):
            ModelParams(gamma=1.0, epsilon_visc=-1e-3)

    def test_critical_coupling_needs_bessel(self):
        with pytest.raises(ValidationError, match="bessel"):
            ModelParams(gamma=1.0, critical_coupling=True)

    def test_critical_coupling_needs_matching_alpha(self):
        with pytest.raises(ValidationError, match="alpha"):
            ModelParams(gamma=1.0, velocity=VelocityKind.bessel(0.3), critical_coupling=True)

    def test_critical_coupling_accepted(self):
        params = ModelParams(gamma=1.0, velocity=VelocityKind.bessel(0.25), critical_coupling=True)
        assert params.is_bessel
        assert not params.is_hilbert

    def test_velocity_model_names(self):
        assert VelocityKind.hilbert().model_name == "hilbert_model"
        assert VelocityKind.bessel(0.25).model_name == "bessel_model"


class TestModelLoading:
    def test_loads_by_module_name(self):
        assert isinstance(load_transport_model("hilbert_model"), HilbertModel)
        assert isinstance(load_transport_model("bessel_model"), BesselModel)
        assert load_transport_model("hilbert_model").get_model_name() == "hilbert_model"

    def test_bare_velocity_kind(self):
        assert load_transport_model("bessel") is load_transport_model("bessel")
        assert isinstance(load_transport_model("bessel"), BesselModel)

    def test_unknown_model_names_the_velocity_kinds(self):
        assert VELOCITY_KINDS == ("hilbert", "bessel")
        with pytest.raises(ValueError, match=r"velocity kind must be one of 'hilbert' \(hilbert_model\), 'bessel' \(bessel_model\)"):
            load_transport_model("vortex_model")


class TestVelocity:
    def test_hilbert_velocity_of_cosine(self, grid):
        u = velocity_field(Field.from_function(np.cos, grid), VelocityKind.hilbert())
        assert np.max(np.abs(u.values - np.sin(grid.nodes))) < 1e-13

    def test_bessel_zero_alpha_is_identity(self, grid, band_limited):
        theta = band_limited(grid, 10, mean=1.0)
        u = velocity_field(theta, VelocityKind.bessel(0.0))
        assert np.max(np.abs(u.values - theta.values)) < 1e-13

    def test_bessel_velocity_of_cosine(self, grid):
        u = velocity_field(Field.from_function(np.cos, grid), VelocityKind.bessel(0.25))
        assert np.max(np.abs(u.values - 2.0 ** -0.25 * np.cos(grid.nodes))) < 1e-13


class TestRightHandSide:
    def test_constant_is_stationary(self, grid, hilbert_params):
        theta = Field.from_values(np.full(grid.n_points, 2.0), grid)
        assert np.max(np.abs(rhs(theta, hilbert_params).values)) < 1e-12

    def test_linear_flow(self, grid):
        params = ModelParams(gamma=1.0, nonlinear=False)
        result = rhs(Field.from_function(np.cos, grid), params)
        assert np.max(np.abs(result.values + np.cos(grid.nodes))) < 1e-13

    def test_model_a_on_cosine(self, grid, hilbert_params):
        # sin^2 - cos^2 from the transport terms, -cos from the dissipation
        result = rhs(Field.from_function(np.cos, grid), hilbert_params)
        expected = -np.cos(2 * grid.nodes) - np.cos(grid.nodes)
        assert np.max(np.abs(result.values - expected)) < 1e-12

    def test_viscosity_adds_second_derivative(self, grid):
        params = ModelParams(gamma=1.0, nu=0.0, epsilon_visc=0.1, nonlinear=False)
        result = rhs(Field.from_function(lambda x: np.cos(3 * x), grid), params)
        assert np.max(np.abs(result.values + 0.9 * np.cos(3 * grid.nodes))) < 1e-12

    @pytest.mark.parametrize("velocity", [VelocityKind.hilbert(), VelocityKind.bessel(0.25)])
    def test_divergence_form_agrees_on_band_limited_data(self, grid, band_limited, velocity):
        theta = band_limited(grid, grid.n_points // 6, mean=1.0)
        advective = rhs(theta, ModelParams(gamma=1.0, delta=0.5, velocity=velocity))
        divergence = rhs(theta, ModelParams(gamma=1.0, delta=0.5, velocity=velocity, divergence_form=True))
        scale = max(1.0, advective.max_abs())
        assert np.max(np.abs(advective.values - divergence.values)) < 1e-11 * scale

    def test_non_finite_result_raises_blow_up(self, grid, hilbert_params, monkeypatch):
        monkeypatch.setattr(
            BaseTransportModel,
            "rhs_coefficients",
            lambda self, c, g, p: np.full_like(c, np.nan),
        )
        with pytest.raises(BlowUpError) as excinfo:
            rhs(Field.from_function(np.cos, grid), hilbert_params, t=0.25)
        assert excinfo.value.time == 0.25


class TestInitialData:
    def test_positive_bump_is_positive(self, grid):
        theta = make_initial_data(InitialDataSpec(), grid)
        assert theta.values.min() >= 1.0 - 1e-12
        assert theta.values.max() <= 3.0 + 1e-12

    def test_positive_bump_validation(self):
        with pytest.raises(ValidationError, match="base"):
            PositiveBump(base=1.0, amplitude=1.0)

    def test_gaussian_peaks_at_center(self, grid):
        theta = make_initial_data(InitialDataSpec(shape=Gaussian(height=2.0, width=0.5)), grid)
        assert int(np.argmax(theta.values)) == grid.n_points // 2
        assert theta.max_abs() == pytest.approx(2.0)

    def test_slow_decay_is_one_at_origin(self, grid):
        theta = make_initial_data(InitialDataSpec(shape=SlowDecay(eta=0.3)), grid)
        assert theta.values[grid.n_points // 2] == pytest.approx(1.0)
        assert theta.values[0] == pytest.approx((1.0 + np.pi ** 2) ** -0.15)

    def test_zero(self, grid):
        assert np.all(make_initial_data(InitialDataSpec(shape=Zero()), grid).values == 0.0)

    def test_trig_polynomial_has_target_norm(self, grid):
        theta = make_initial_data(InitialDataSpec(shape=TrigPolynomial(seed=3, target_a0=0.2)), grid)
        assert a0_norm(theta) == pytest.approx(0.2, rel=1e-12)

    def test_trig_polynomial_is_reproducible(self, grid):
        spec = InitialDataSpec(shape=TrigPolynomial(seed=11))
        assert np.array_equal(make_initial_data(spec, grid).values, make_initial_data(spec, grid).values)
        other = InitialDataSpec(shape=TrigPolynomial(seed=12))
        assert not np.array_equal(make_initial_data(spec, grid).values, make_initial_data(other, grid).values)

    def test_zero_trig_polynomial_cannot_be_rescaled(self, grid, monkeypatch):
        monkeypatch.setattr("src.models.initial_data._profile", lambda shape, grid: np.zeros(grid.n_points))
        with pytest.raises(InitialDataError):
            make_initial_data(InitialDataSpec(shape=TrigPolynomial()), grid)

    def test_perturbation_has_prescribed_l2_size(self, grid):
        base = make_initial_data(InitialDataSpec(), grid)
        perturbed = make_initial_data(InitialDataSpec(perturbation_eta=1e-3), grid)
        distance = np.sqrt(grid.dx * np.sum((perturbed.values - base.values) ** 2))
        assert distance == pytest.approx(1e-3, rel=1e-10)

    def test_mollified_data_keeps_mass(self, grid):
        plain = make_initial_data(InitialDataSpec(shape=Gaussian()), grid)
        smooth = make_initial_data(InitialDataSpec(shape=Gaussian(), mollify_eps=0.2), grid)
        assert smooth.values.sum() == pytest.approx(plain.values.sum(), rel=1e-12)
        assert smooth.max_abs() < plain.max_abs()

    def test_windowed_data(self, wide_grid):
        spec = InitialDataSpec(shape=PositiveBump(mode=8), window_eps=0.01)
        theta = make_initial_data(spec, wide_grid)
        assert theta.values[0] < 1e-8
        assert theta.values.min() >= -1e-12
