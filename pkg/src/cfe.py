"""
Compact feature extraction: block-wise reduction of weighted spectra.

Each H x W plane is tiled by a rows x cols grid of equal contiguous tiles,
numbered row-major (k = r * cols + c), and every tile is reduced to one value.
"""

from dataclasses import dataclass

import numpy as np

try:
    from errors import ConfigError, PartitionError, ShapeError
    from models import REDUCTIONS, BlockGrid
except ImportError:
    from .errors import ConfigError, PartitionError, ShapeError
    from .models import REDUCTIONS, BlockGrid


@dataclass(frozen=True, eq=False)
class CompactFeature:
    """
    Block-reduced spectrum, one value per frame, channel and tile.

    Attributes:
        values: N x C x K tensor
        reduction: Reduction that produced it (max, min, avg, absmax)
    """

    values: np.ndarray
    reduction: str = "max"

    @property
    def shape(self):
        return self.values.shape


def partition_blocks(spectrum, grid: BlockGrid) -> np.ndarray:
    """
    View the trailing H x W planes as K tiles.

    Args:
        spectrum: Array of shape (..., H, W)
        grid: Tiling; rows must divide H and cols must divide W

    Returns:
        Array of shape (..., K, H / rows, W / cols)

    Raises:
        PartitionError: If H or W is not divisible by the grid
    """
    values = np.asarray(spectrum, dtype=np.float64)
    if values.ndim < 2:
        raise ShapeError(f"Cannot partition an array of shape {values.shape}")
    height, width = values.shape[-2:]
    if height % grid.rows != 0 or width % grid.cols != 0:
        raise PartitionError(
            f"Cannot split a {height}x{width} plane (H={height}, W={width}) into a "
            f"{grid} block grid: H must be divisible by {grid.rows} and W by {grid.cols}"
        )
    lead = values.shape[:-2]
    tile_h, tile_w = height // grid.rows, width // grid.cols
    tiles = values.reshape(lead + (grid.rows, tile_h, grid.cols, tile_w))
    order = tuple(range(len(lead))) + tuple(len(lead) + i for i in (0, 2, 1, 3))
    tiles = tiles.transpose(order)
    return tiles.reshape(lead + (grid.k, tile_h, tile_w))


def reduce_tiles(tiles: np.ndarray, reduction: str) -> np.ndarray:
    """Reduce the last two (tile) axes with the named reduction."""
    flat = tiles.reshape(tiles.shape[:-2] + (-1,))
    if reduction == "max":
        return flat.max(axis=-1)
    if reduction == "min":
        return flat.min(axis=-1)
    if reduction == "avg":
        return flat.mean(axis=-1)
    if reduction == "absmax":
        # signed coefficient of largest magnitude; first one wins on ties
        index = np.abs(flat).argmax(axis=-1)
        return np.take_along_axis(flat, index[..., None], axis=-1)[..., 0]
    raise ConfigError(f"Reduction must be one of {REDUCTIONS}, got {reduction!r}")


def compact(spectrum, grid: BlockGrid, reduction: str = "max") -> CompactFeature:
    """
    Reduce every tile of an N x C x H x W spectrum to one value.

    Returns:
        CompactFeature with values of shape N x C x K
    """
    values = np.asarray(spectrum, dtype=np.float64)
    if values.ndim != 4:
        raise ShapeError(f"Expected an N x C x H x W spectrum, got shape {values.shape}")
    if reduction not in REDUCTIONS:
        raise ConfigError(f"Reduction must be one of {REDUCTIONS}, got {reduction!r}")
    tiles = partition_blocks(values, grid)
    return CompactFeature(values=reduce_tiles(tiles, reduction), reduction=reduction)
