"""
Orthonormal 2D DCT-II over planes and batches of feature maps.

The transform is separable: a plane x of shape H x W maps to
D = T_H @ x @ T_W.T, where T_M is the M x M cosine table with rows
c(u) * cos((i + 0.5) * pi * u / M). All spectral math runs in float64.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

try:
    from errors import InvalidInputError, ShapeError
except ImportError:
    from .errors import InvalidInputError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CosineTable:
    """
    Orthonormal DCT-II basis of one dimension.

    Attributes:
        size: Signal length M
        coefficients: M x M matrix, entry (u, i) = c(u) * cos((i + 0.5) * pi * u / M)
    """

    size: int
    coefficients: np.ndarray

    @classmethod
    def build(cls, size: int) -> "CosineTable":
        if size < 1:
            raise ShapeError(f"Cosine table size must be positive, got {size}")
        u = np.arange(size, dtype=np.float64)[:, None]
        i = np.arange(size, dtype=np.float64)[None, :]
        table = np.cos((i + 0.5) * np.pi * u / size)
        table[0, :] *= np.sqrt(1.0 / size)
        table[1:, :] *= np.sqrt(2.0 / size)
        table.setflags(write=False)
        return cls(size=size, coefficients=table)


@lru_cache(maxsize=64)
def cosine_table(size: int) -> CosineTable:
    """Shared, immutable cosine table for a given length."""
    return CosineTable.build(size)


def _as_plane(values, name: str = "plane") -> np.ndarray:
    plane = np.asarray(values, dtype=np.float64)
    if plane.ndim != 2 or plane.shape[0] < 1 or plane.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2D array, got shape {plane.shape}")
    if not np.all(np.isfinite(plane)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return plane


def dct2_forward(plane) -> np.ndarray:
    """
    Forward orthonormal 2D DCT-II of one plane.

    Args:
        plane: H x W real array; float32 input is widened to float64

    Returns:
        H x W array of coefficients D(u, v)

    Raises:
        InvalidInputError: If the plane holds NaN or Inf
    """
    x = _as_plane(plane)
    rows = cosine_table(x.shape[0]).coefficients
    cols = cosine_table(x.shape[1]).coefficients
    return rows @ x @ cols.T


def dct2_inverse(spectrum) -> np.ndarray:
    """Inverse of dct2_forward (the orthonormal DCT-III)."""
    d = _as_plane(spectrum, "spectrum")
    rows = cosine_table(d.shape[0]).coefficients
    cols = cosine_table(d.shape[1]).coefficients
    return rows.T @ d @ cols


def _check_sequence(tensor) -> np.ndarray:
    maps = np.asarray(tensor, dtype=np.float64)
    if maps.ndim != 4:
        raise ShapeError(f"Expected an N x C x H x W tensor, got shape {maps.shape}")
    if any(dim < 1 for dim in maps.shape):
        raise ShapeError(f"Feature map sequence has an empty dimension: shape {maps.shape}")
    return maps


def dct2_batch(tensor, workers: int = 1, inverse: bool = False) -> np.ndarray:
    """
    Transform every (n, c) plane of an N x C x H x W tensor independently.

    Planes are dispatched to a thread pool when workers > 1; each plane goes
    through the same single-plane routine, so the result does not depend on
    the worker count.

    Raises:
        ShapeError: If the tensor is not rank 4 or has an empty dimension
        InvalidInputError: If a plane is non-finite; the message names (n, c)
    """
    maps = _check_sequence(tensor)
    n_frames, n_channels = maps.shape[:2]
    transform = dct2_inverse if inverse else dct2_forward
    out = np.empty_like(maps)
    indices = [(n, c) for n in range(n_frames) for c in range(n_channels)]

    def run(index: Tuple[int, int]) -> None:
        n, c = index
        try:
            out[n, c] = transform(maps[n, c])
        except InvalidInputError as e:
            raise InvalidInputError(f"plane (n={n}, c={c}): {e}") from e

    if workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, indices))
    else:
        for index in indices:
            run(index)
    return out
