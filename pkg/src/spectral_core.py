"""
Discrete Fourier machinery on the periodic cell [-L/2, L/2).

Fields are sampled at the nodes x_m = -L/2 + m*dx, m = 0..N-1. Coefficients
follow the convention

    f(x) = sum_j c_j exp(i k_j x),    k_j = 2*pi*j/L,    j = -N/2 .. N/2-1,

so c_j = (1/N) sum_m f(x_m) exp(-i k_j x_m). Arrays of coefficients are kept
in FFT order: entry ``i`` holds the mode ``grid.mode_index[i]``. Because the
cell starts at -L/2, c_j differs from the plain FFT output only by the phase
(-1)^j, which is applied exactly.

- Grid: immutable resolution/length pair with cached nodes and wavenumbers
- Field / Spectrum: immutable samples and coefficients bound to a Grid
- forward_transform / inverse_transform: FFT path with validation
- apply_multiplier / dealias / dealiased_product: Fourier-side operations
- dft_reference: independent O(N^2) summation used as an oracle
"""

import logging
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator
from scipy import fft as sp_fft

from src.errors import AsymmetricSpectrumError, InvalidFieldError, OracleSizeError

logger = logging.getLogger(__name__)

MIN_POINTS = 8
HERMITIAN_TOLERANCE = 1e-12
DFT_REFERENCE_MAX_POINTS = 4096
_DFT_BLOCK_ROWS = 256

Symbol = Callable[[np.ndarray], np.ndarray]


# =============================================================================
# Grid
# =============================================================================


class _GridArrays(NamedTuple):
    nodes: np.ndarray
    mode_index: np.ndarray
    wavenumbers: np.ndarray
    phase: np.ndarray
    dealias_mask: np.ndarray


@lru_cache(maxsize=64)
def _grid_arrays(n_points: int, domain_length: float) -> _GridArrays:
    dx = domain_length / n_points
    nodes = -0.5 * domain_length + dx * np.arange(n_points)
    mode_index = np.rint(sp_fft.fftfreq(n_points) * n_points).astype(np.int64)
    wavenumbers = 2.0 * np.pi * mode_index / domain_length
    phase = np.where(mode_index % 2 == 0, 1.0, -1.0)
    # 2/3 rule: keep |j| <= N/3
    dealias_mask = 3 * np.abs(mode_index) <= n_points
    arrays = _GridArrays(nodes, mode_index, wavenumbers, phase, dealias_mask)
    for array in arrays:
        array.setflags(write=False)
    return arrays


class Grid(BaseModel):
    """
    Immutable periodic 1D grid.

    Attributes:
        n_points: Number of nodes N (power of two, at least 8)
        domain_length: Length L of the cell [-L/2, L/2)

    Derived arrays (nodes, wavenumbers, mode indices, dealias mask) are
    computed once per (N, L) pair and shared read-only.

    Example:
        >>> grid = Grid.create(n_points=64, domain_length=2 * np.pi)
        >>> grid.dx == 2 * np.pi / 64
        True
    """

    model_config = ConfigDict(frozen=True)

    n_points: int = pydantic.Field(description="Number of grid nodes")
    domain_length: float = pydantic.Field(gt=0.0, allow_inf_nan=False, description="Cell length L")

    @field_validator("n_points")
    @classmethod
    def validate_power_of_two(cls, v: int) -> int:
        if v < MIN_POINTS or v & (v - 1) != 0:
            raise ValueError(f"n_points must be a power of two >= {MIN_POINTS}, got {v}")
        return v

    @classmethod
    def create(cls, n_points: int = 1024, domain_length: float = 32.0 * np.pi) -> "Grid":
        """Factory with the laboratory defaults N = 1024, L = 32*pi."""
        return cls(n_points=n_points, domain_length=domain_length)

    @property
    def dx(self) -> float:
        return self.domain_length / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return _grid_arrays(self.n_points, self.domain_length).nodes

    @property
    def mode_index(self) -> np.ndarray:
        return _grid_arrays(self.n_points, self.domain_length).mode_index

    @property
    def wavenumbers(self) -> np.ndarray:
        return _grid_arrays(self.n_points, self.domain_length).wavenumbers

    @property
    def dealias_mask(self) -> np.ndarray:
        return _grid_arrays(self.n_points, self.domain_length).dealias_mask

    @property
    def nyquist_position(self) -> int:
        """Array position of the unpaired mode j = -N/2."""
        return self.n_points // 2

    @property
    def k_max(self) -> float:
        """Largest |k| on the grid (the Nyquist wavenumber)."""
        return np.pi * self.n_points / self.domain_length

    @property
    def k_min(self) -> float:
        """Smallest nonzero |k|."""
        return 2.0 * np.pi / self.domain_length

    def position_of(self, j: int) -> int:
        """Array position holding mode ``j``."""
        return int(j) % self.n_points


# =============================================================================
# Raw coefficient helpers (no validation; used on hot paths)
# =============================================================================


def to_coefficients(values: np.ndarray, grid: Grid) -> np.ndarray:
    arrays = _grid_arrays(grid.n_points, grid.domain_length)
    return arrays.phase * sp_fft.fft(values, norm="forward")


def to_values(coefficients: np.ndarray, grid: Grid) -> np.ndarray:
    arrays = _grid_arrays(grid.n_points, grid.domain_length)
    return sp_fft.ifft(arrays.phase * coefficients, norm="forward").real


def multiplier_values(grid: Grid, symbol: Symbol) -> np.ndarray:
    """
    Evaluate ``symbol`` on the grid wavenumbers.

    The unpaired Nyquist mode gets the average of symbol(k) and symbol(-k):
    odd symbols (derivative, Hilbert) vanish there, and a Hermitian symbol
    keeps its real part, so real fields stay real.
    """
    k = grid.wavenumbers
    values = np.asarray(symbol(k), dtype=complex)
    if values.shape == ():
        values = np.full(k.shape, complex(values))
    else:
        values = values.copy()
    nyq = grid.nyquist_position
    mirrored = np.asarray(symbol(np.array([-k[nyq]])), dtype=complex).reshape(-1)[0]
    values[nyq] = 0.5 * (values[nyq] + mirrored)
    return values


def product_coefficients(a_hat: np.ndarray, b_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficients of the pointwise product a*b with the 2/3 rule applied."""
    product = to_values(a_hat, grid) * to_values(b_hat, grid)
    return to_coefficients(product, grid) * grid.dealias_mask


def hermitian_defect(coefficients: np.ndarray) -> float:
    """max_j |c_{-j} - conj(c_j)|."""
    mirrored = np.roll(coefficients[::-1], 1)
    return float(np.max(np.abs(coefficients - np.conj(mirrored)))) if coefficients.size else 0.0


# =============================================================================
# Field and Spectrum
# =============================================================================


def _require_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise InvalidFieldError(f"Grid mismatch: {a!r} vs {b!r}")


class Field(BaseModel):
    """
    Real samples of a function on a Grid.

    Samples are finite and read-only. The forward transform is cached on the
    instance the first time it is requested.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray
    _spectrum: Optional["Spectrum"] = PrivateAttr(default=None)

    @classmethod
    def from_values(cls, values, grid: Grid) -> "Field":
        """
        Build a Field from samples.

        Raises:
            InvalidFieldError: If the shape does not match the grid or any sample is not finite
        """
        array = np.array(values, dtype=float)
        if array.shape != (grid.n_points,):
            raise InvalidFieldError(f"Field shape {array.shape} does not match grid size {grid.n_points}")
        if not np.all(np.isfinite(array)):
            raise InvalidFieldError("Field contains NaN or Inf values")
        array.setflags(write=False)
        return cls.model_construct(grid=grid, values=array)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], grid: Grid) -> "Field":
        return cls.from_values(np.broadcast_to(func(grid.nodes), (grid.n_points,)), grid)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls.from_values(np.zeros(grid.n_points), grid)

    def __add__(self, other: "Field") -> "Field":
        _require_same_grid(self.grid, other.grid)
        return Field.from_values(self.values + other.values, self.grid)

    def __sub__(self, other: "Field") -> "Field":
        _require_same_grid(self.grid, other.grid)
        return Field.from_values(self.values - other.values, self.grid)

    def scaled(self, factor: float) -> "Field":
        return Field.from_values(factor * self.values, self.grid)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


class Spectrum(BaseModel):
    """Fourier coefficients c_j of a field, stored in FFT order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    coefficients: np.ndarray

    @classmethod
    def from_coefficients(cls, coefficients, grid: Grid) -> "Spectrum":
        array = np.array(coefficients, dtype=complex)
        if array.shape != (grid.n_points,):
            raise InvalidFieldError(f"Spectrum shape {array.shape} does not match grid size {grid.n_points}")
        array.setflags(write=False)
        return cls.model_construct(grid=grid, coefficients=array)

    @classmethod
    def from_modes(cls, modes: dict, grid: Grid) -> "Spectrum":
        """Build a spectrum from a {mode index: coefficient} mapping."""
        array = np.zeros(grid.n_points, dtype=complex)
        for j, c in modes.items():
            array[grid.position_of(j)] = c
        return cls.from_coefficients(array, grid)

    def coefficient(self, j: int) -> complex:
        return complex(self.coefficients[self.grid.position_of(j)])


# =============================================================================
# Transforms
# =============================================================================


def forward_transform(f: Field) -> Spectrum:
    """
    Discrete Fourier coefficients of ``f``.

    Parseval holds in the form L * sum|c_j|^2 = dx * sum f(x_m)^2.

    Raises:
        InvalidFieldError: If ``f`` contains non-finite samples
    """
    if f._spectrum is not None:
        return f._spectrum
    if not np.all(np.isfinite(f.values)):
        raise InvalidFieldError("Cannot transform a field with NaN or Inf values")
    spectrum = Spectrum.from_coefficients(to_coefficients(f.values, f.grid), f.grid)
    f._spectrum = spectrum
    return spectrum


def inverse_transform(s: Spectrum) -> Field:
    """
    Real field with coefficients ``s``.

    Raises:
        AsymmetricSpectrumError: If c_{-j} differs from conj(c_j) by more than
            1e-12 of the largest coefficient magnitude
    """
    c = s.coefficients
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    defect = hermitian_defect(c)
    if defect > HERMITIAN_TOLERANCE * scale:
        raise AsymmetricSpectrumError(
            f"Spectrum is not Hermitian: defect {defect:.3e} exceeds {HERMITIAN_TOLERANCE:g} x {scale:.3e}"
        )
    field = Field.from_values(to_values(c, s.grid), s.grid)
    field._spectrum = s
    return field


def apply_multiplier(s: Spectrum, symbol: Symbol) -> Spectrum:
    """c_j -> symbol(k_j) * c_j, with the Nyquist rule of ``multiplier_values``."""
    return Spectrum.from_coefficients(multiplier_values(s.grid, symbol) * s.coefficients, s.grid)


def dealias(s: Spectrum) -> Spectrum:
    """Zero every coefficient with |j| > N/3."""
    return Spectrum.from_coefficients(s.coefficients * s.grid.dealias_mask, s.grid)


def dealiased_product(f: Field, g: Field) -> Field:
    """Pointwise product of two fields followed by the 2/3 rule."""
    _require_same_grid(f.grid, g.grid)
    return inverse_transform(dealias(forward_transform(Field.from_values(f.values * g.values, f.grid))))


def dft_reference(f: Field) -> Spectrum:
    """
    Coefficients by direct summation, c_j = (1/N) sum_m f(x_m) exp(-i k_j x_m).

    The phase k_j x_m = 2*pi*j*(m - N/2)/N is reduced modulo N in integer
    arithmetic before exponentiation.

    Raises:
        OracleSizeError: If N exceeds 4096
    """
    grid = f.grid
    n = grid.n_points
    if n > DFT_REFERENCE_MAX_POINTS:
        raise OracleSizeError(f"dft_reference is limited to N <= {DFT_REFERENCE_MAX_POINTS}, got N={n}")
    shifted_nodes = np.arange(n, dtype=np.int64) - n // 2
    modes = grid.mode_index
    coefficients = np.empty(n, dtype=complex)
    for start in range(0, n, _DFT_BLOCK_ROWS):
        stop = min(start + _DFT_BLOCK_ROWS, n)
        reduced = np.mod(np.outer(modes[start:stop], shifted_nodes), n)
        coefficients[start:stop] = np.exp(-2j * np.pi * reduced / n) @ f.values / n
    return Spectrum.from_coefficients(coefficients, grid)
