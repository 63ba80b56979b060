"""
Frequency temporal attention over weighted spectra.

Stages, all per frame:
    channel_l2        A(n, h, w)  = sqrt(sum_c F(n, c, h, w)^2)
    spatial_normalize A'(n, h, w) = A / (sum_hw A + eps)
    block_scores      A''(n, k)   = sum of A' over tile k
    frame_l1          W(n, k)     = A'' / (sum_k A'' + eps)
"""

import logging
from dataclasses import dataclass

import numpy as np

try:
    from cfe import partition_blocks
    from errors import InvalidInputError, ShapeError
    from models import BlockGrid
except ImportError:
    from .cfe import partition_blocks
    from .errors import InvalidInputError, ShapeError
    from .models import BlockGrid

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-12


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """
    Per-frame block weights.

    Attributes:
        values: N x K tensor, non-negative, rows summing to 1 (0 for all-zero frames)
    """

    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def degenerate_frames(self):
        """Indices of frames whose attention row is all zero."""
        return [int(n) for n in np.flatnonzero(~np.any(self.values > 0, axis=1))]

    def to_csv(self) -> str:
        """N rows x K columns, comma separated, full float precision."""
        return "\n".join(",".join(repr(float(v)) for v in row) for row in self.values) + "\n"


def channel_l2(spectrum) -> np.ndarray:
    """L2 norm across channels: N x C x H x W -> N x H x W."""
    values = np.asarray(spectrum, dtype=np.float64)
    if values.ndim != 4 or values.shape[1] < 1:
        raise ShapeError(f"Expected an N x C x H x W spectrum with C >= 1, got shape {values.shape}")
    return np.sqrt(np.sum(values * values, axis=1))


def spatial_normalize(a, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Divide each frame by its total mass (plus epsilon)."""
    values = np.asarray(a, dtype=np.float64)
    if values.ndim != 3:
        raise ShapeError(f"Expected an N x H x W tensor, got shape {values.shape}")
    if np.any(values < 0):
        raise InvalidInputError("Attention input must be non-negative")
    totals = values.sum(axis=(1, 2), keepdims=True)
    return values / (totals + epsilon)


def block_scores(a_prime, grid: BlockGrid) -> np.ndarray:
    """Sum of normalized attention inside each tile: N x H x W -> N x K."""
    values = np.asarray(a_prime, dtype=np.float64)
    if values.ndim != 3:
        raise ShapeError(f"Expected an N x H x W tensor, got shape {values.shape}")
    return partition_blocks(values, grid).sum(axis=(-2, -1))


def frame_l1(a_dprime, epsilon: float = DEFAULT_EPSILON) -> AttentionMap:
    """L1-normalize each frame's block scores."""
    values = np.asarray(a_dprime, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"Expected an N x K tensor, got shape {values.shape}")
    if np.any(values < 0):
        raise InvalidInputError("Block scores must be non-negative")
    totals = values.sum(axis=1, keepdims=True)
    return AttentionMap(values=values / (totals + epsilon))


def attention(spectrum, grid: BlockGrid, epsilon: float = DEFAULT_EPSILON) -> AttentionMap:
    """Full attention chain from an N x C x H x W weighted spectrum to block weights."""
    a = channel_l2(spectrum)
    a_prime = spatial_normalize(a, epsilon)
    result = frame_l1(block_scores(a_prime, grid), epsilon)
    empty = result.degenerate_frames()
    if empty:
        logger.warning("All-zero spectrum in frames %s; their attention rows are zero", empty)
    return result


def uniform_attention(frames: int, blocks: int) -> AttentionMap:
    """Constant 1/K weights, the attention-free (compact feature only) variant."""
    if frames < 1 or blocks < 1:
        raise ShapeError(f"Uniform attention needs N, K >= 1, got N={frames}, K={blocks}")
    return AttentionMap(values=np.full((frames, blocks), 1.0 / blocks))
