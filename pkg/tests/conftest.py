"""Shared fixtures: small grids, band-limited random fields and synthetic series."""

import numpy as np
import pytest

from src.functionals import DiagnosticsRecord
from src.models.params import ModelParams, VelocityKind
from src.spectral_core import Field, Grid, Spectrum, inverse_transform
from src.timestepper import TimeSeries


@pytest.fixture
def grid():
    """2*pi-periodic grid with 64 nodes, so that k_j = j."""
    return Grid.create(n_points=64, domain_length=2 * np.pi)


@pytest.fixture
def wide_grid():
    """The laboratory cell L = 32*pi at a reduced resolution."""
    return Grid.create(n_points=256, domain_length=32 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def band_limited(rng):
    """Factory for random real fields whose modes satisfy 0 < |j| <= max_mode."""

    def make(grid: Grid, max_mode: int, mean: float = 0.0, scale: float = 1.0) -> Field:
        modes = {0: mean}
        for j in range(1, max_mode + 1):
            c = scale * (rng.standard_normal() + 1j * rng.standard_normal()) / j
            modes[j] = c
            modes[-j] = np.conj(c)
        return inverse_transform(Spectrum.from_modes(modes, grid))

    return make


@pytest.fixture
def hilbert_params():
    return ModelParams(gamma=1.0, delta=1.0, nu=1.0)


@pytest.fixture
def bessel_params():
    return ModelParams(gamma=1.0, delta=1.0, nu=1.0, velocity=VelocityKind.bessel(0.25))


@pytest.fixture
def make_series():
    """
    Factory for TimeSeries with the given columns (arrays of equal length);
    every other DiagnosticsRecord column is zero and t defaults to 0, 0.1, ...
    """

    def make(**columns) -> TimeSeries:
        length = len(next(iter(columns.values())))
        columns.setdefault("t", 0.1 * np.arange(length))
        rows = []
        for i in range(length):
            row = {name: 0.0 for name in DiagnosticsRecord.columns()}
            row.update({name: float(values[i]) for name, values in columns.items()})
            rows.append(DiagnosticsRecord(**row))
        return TimeSeries(records=rows)

    return make
