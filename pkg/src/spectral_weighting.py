"""
Band weight matrix that amplifies medium and high DCT frequencies.

Cell (u, v) belongs to band alpha = 0 when u + v < H/3, alpha = 1 when
H/3 <= u + v <= 2H/3 and alpha = 2 above that, with no upper cutoff. The
weight is beta ** alpha. Bands are decided from H alone, in exact integer
arithmetic (3 * (u + v) compared with H and 2H).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

try:
    from errors import ConfigError, DegenerateBandError, ShapeError
    from models import SQRT2
except ImportError:
    from .errors import ConfigError, DegenerateBandError, ShapeError
    from .models import SQRT2


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """
    Multiplicative band amplifier for H x W spectra.

    Attributes:
        height: H
        width: W
        base: beta
        alpha: Integer band index per cell (0, 1 or 2)
        weights: beta ** alpha per cell
    """

    height: int
    width: int
    base: float
    alpha: np.ndarray
    weights: np.ndarray

    def levels(self):
        """The three weight values (beta^0, beta^1, beta^2)."""
        return (1.0, self.base, self.base ** 2)


def band_indices(height: int, width: int) -> np.ndarray:
    """Alpha band of every cell of an H x W spectrum."""
    if height < 3:
        raise DegenerateBandError(f"Band weighting needs H >= 3, got H={height}")
    if width < 1:
        raise ShapeError(f"Spectrum width must be positive, got W={width}")
    diagonal = 3 * (np.arange(height)[:, None] + np.arange(width)[None, :])
    alpha = np.where(diagonal < height, 0, np.where(diagonal <= 2 * height, 1, 2))
    return alpha.astype(np.int64)


@lru_cache(maxsize=32)
def build_weight_matrix(height: int, width: int, base: float = SQRT2) -> WeightMatrix:
    """
    Build the band weight matrix for an H x W spectrum.

    Raises:
        DegenerateBandError: If H < 3, where the bands would be empty
        ConfigError: If beta is not positive
    """
    if not base > 0:
        raise ConfigError(f"Weight base beta must be positive, got {base}")
    alpha = band_indices(height, width)
    levels = np.array([1.0, base, base ** 2], dtype=np.float64)
    weights = levels[alpha]
    alpha.setflags(write=False)
    weights.setflags(write=False)
    return WeightMatrix(height=height, width=width, base=float(base), alpha=alpha, weights=weights)


def apply_weights(spectrum, weights: WeightMatrix) -> np.ndarray:
    """Multiply every H x W plane of a spectrum by the weight matrix."""
    values = np.asarray(spectrum, dtype=np.float64)
    if values.ndim < 2 or values.shape[-2:] != (weights.height, weights.width):
        raise ShapeError(
            f"Weight matrix is {weights.height}x{weights.width} but spectrum planes are "
            f"{'x'.join(str(d) for d in values.shape[-2:])}"
        )
    return values * weights.weights


def band_map_text(weights: WeightMatrix) -> str:
    """Render the alpha bands as a text grid, one row per u."""
    return "\n".join(" ".join(str(int(a)) for a in row) for row in weights.alpha)


def band_energies(spectrum, weights: WeightMatrix) -> dict:
    """Mean squared coefficient of each alpha band, over all leading dimensions."""
    values = np.asarray(spectrum, dtype=np.float64)
    if values.shape[-2:] != (weights.height, weights.width):
        raise ShapeError("Spectrum planes do not match the weight matrix")
    energies = {}
    for band in (0, 1, 2):
        mask = weights.alpha == band
        energies[band] = float(np.mean(values[..., mask] ** 2)) if mask.any() else 0.0
    return energies
