"""
Sharp-cutoff dyadic decomposition.

Shell j holds the modes with 2^(j-1) < |k| <= 2^j. For a cut index K,
``decompose`` returns the shells j >= K and a low-pass part S_K f holding
|k| <= 2^(K-1), so that S_K f + sum_j Delta_j f = f and the pieces are
L^2-orthogonal.
"""

import logging
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.errors import ParameterError
from src.spectral_core import Field, Grid, Spectrum, forward_transform, inverse_transform

logger = logging.getLogger(__name__)

BERNSTEIN_BOUND = 4.0


def shell_index(k: np.ndarray) -> np.ndarray:
    """
    Integer j with 2^(j-1) < |k| <= 2^j, computed exactly from the binary exponent.

    Entries with k = 0 get the smallest int64 value.
    """
    magnitude = np.abs(np.asarray(k, dtype=float))
    mantissa, exponent = np.frexp(magnitude)
    index = np.where(mantissa == 0.5, exponent - 1, exponent).astype(np.int64)
    return np.where(magnitude == 0.0, np.iinfo(np.int64).min, index)


class DyadicBlocks(BaseModel):
    """Delta_j f for every nonempty shell j >= K, plus the low-pass part S_K f."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cut: int
    blocks: Dict[int, Field]
    low_pass: Field

    def reconstruct(self) -> Field:
        total = self.low_pass
        for block in self.blocks.values():
            total = total + block
        return total


def decompose(f: Field, K: int) -> DyadicBlocks:
    """
    Split ``f`` into sharp dyadic shells.

    Raises:
        ParameterError: If 2^K exceeds the largest grid wavenumber
    """
    grid = f.grid
    if 2.0 ** K > grid.k_max:
        raise ParameterError(f"decompose needs 2^K <= k_max = {grid.k_max:.6g}, got K={K}")
    c = forward_transform(f).coefficients
    shells = shell_index(grid.wavenumbers)
    in_low_pass = shells < K

    blocks: Dict[int, Field] = {}
    for j in np.unique(shells[~in_low_pass]):
        mask = shells == j
        blocks[int(j)] = inverse_transform(Spectrum.from_coefficients(np.where(mask, c, 0.0), grid))
    low_pass = inverse_transform(Spectrum.from_coefficients(np.where(in_low_pass, c, 0.0), grid))
    return DyadicBlocks(cut=K, blocks=blocks, low_pass=low_pass)


def _lp(values: np.ndarray, grid: Grid, p: float) -> float:
    magnitude = np.abs(values)
    if np.isinf(p):
        return float(np.max(magnitude))
    return float((grid.dx * np.sum(magnitude ** p)) ** (1.0 / p))


class BernsteinReport(BaseModel):
    """Per-shell Bernstein ratios and the verdict against the bound 4."""

    model_config = ConfigDict(frozen=True)

    derivative_ratios: Dict[int, float]
    embedding_ratios: Dict[int, float]
    skipped_shells: List[int]
    max_ratio: float
    holds: bool


def bernstein_check(blocks: DyadicBlocks, s: float, p: float, q: float) -> BernsteinReport:
    """
    Measure ||Lambda^s Delta_j f||_p / (2^(js) ||Delta_j f||_p) and
    ||Delta_j f||_q / (2^(j(1/p - 1/q)) ||Delta_j f||_p) on every shell.
    Shells with a zero block are skipped.
    """
    if not (p >= 1.0 and q >= p):
        raise ParameterError(f"bernstein_check needs 1 <= p <= q, got p={p}, q={q}")
    derivative_ratios: Dict[int, float] = {}
    embedding_ratios: Dict[int, float] = {}
    skipped: List[int] = []
    for j, block in sorted(blocks.blocks.items()):
        grid = block.grid
        base = _lp(block.values, grid, p)
        if base == 0.0:
            skipped.append(j)
            continue
        c = forward_transform(block).coefficients
        lambda_s = inverse_transform(Spectrum.from_coefficients(np.abs(grid.wavenumbers) ** s * c, grid))
        derivative_ratios[j] = _lp(lambda_s.values, grid, p) / (2.0 ** (j * s) * base)
        exponent = (1.0 / p) - (0.0 if np.isinf(q) else 1.0 / q)
        embedding_ratios[j] = _lp(block.values, grid, q) / (2.0 ** (j * exponent) * base)
    ratios = list(derivative_ratios.values()) + list(embedding_ratios.values())
    max_ratio = max(ratios) if ratios else 0.0
    if skipped:
        logger.debug(f"Bernstein check skipped empty shells {skipped}")
    return BernsteinReport(
        derivative_ratios=derivative_ratios,
        embedding_ratios=embedding_ratios,
        skipped_shells=skipped,
        max_ratio=max_ratio,
        holds=max_ratio <= BERNSTEIN_BOUND,
    )
