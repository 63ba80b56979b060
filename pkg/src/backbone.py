"""
Pluggable per-frame feature extractors.

A backbone turns an N x c_in x H_in x W_in frame tensor into the
N x C x H x W feature map sequence the frequency pipeline consumes:

- identity: frames pass through unchanged
- rand-conv: frozen random convolution stack with ReLU, reproducible from a seed
- tensor-file: precomputed maps read from FMT1 files

FMT1 layout: magic b"FMT1", little-endian u32 N, C, H, W, then the float32
payload in N-major row-major order.
"""

import logging
import math
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from atomic_io import atomic_write_bytes
    from errors import ConfigError, FileOperationError, FormatError, ShapeError
    from models import BackboneSpec
except ImportError:
    from .atomic_io import atomic_write_bytes
    from .errors import ConfigError, FileOperationError, FormatError, ShapeError
    from .models import BackboneSpec

logger = logging.getLogger(__name__)

TENSOR_MAGIC = b"FMT1"
TENSOR_HEADER = struct.Struct("<4s4I")
TENSOR_SUFFIX = ".fmt"


def write_tensor_file(path, tensor) -> Path:
    """Save an N x C x H x W tensor as an FMT1 file (float32 payload)."""
    values = np.asarray(tensor)
    if values.ndim != 4:
        raise ShapeError(f"Tensor files hold N x C x H x W tensors, got shape {values.shape}")
    header = TENSOR_HEADER.pack(TENSOR_MAGIC, *values.shape)
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    return atomic_write_bytes(path, header + payload)


def read_tensor_file(path) -> np.ndarray:
    """
    Load an FMT1 file.

    Raises:
        FormatError: On a bad magic, a big-endian header or a payload whose size
            does not match the header
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except (OSError, IOError) as e:
        raise FileOperationError(f"Cannot read tensor file {path}: {e}") from e
    if len(raw) < TENSOR_HEADER.size:
        raise FormatError(f"{path}: file too short for an FMT1 header")
    magic, *dims = TENSOR_HEADER.unpack_from(raw)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {TENSOR_MAGIC!r}")
    payload = len(raw) - TENSOR_HEADER.size
    if math.prod(dims) * 4 != payload:
        swapped = struct.unpack(">4I", raw[4:TENSOR_HEADER.size])
        if math.prod(swapped) * 4 == payload:
            raise FormatError(f"{path}: header is big-endian, expected little-endian")
        raise FormatError(
            f"{path}: header shape {tuple(dims)} needs {math.prod(dims) * 4} payload bytes, found {payload}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=TENSOR_HEADER.size)
    return values.reshape(dims).astype(np.float32)


def conv_output_size(size: int, stride: int) -> int:
    """Spatial size after a same-padded convolution with the given stride."""
    return (size + stride - 1) // stride


def _conv2d(x: np.ndarray, weights: np.ndarray, stride: int) -> np.ndarray:
    pad = weights.shape[-1] // 2
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(padded, weights.shape[-2:], axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    return np.einsum("nchwij,ocij->nohw", windows, weights)


class Backbone:
    """
    Frame-to-feature-map extractor built from a BackboneSpec.

    Instances are immutable once their random weights exist and can be
    shared by worker threads.
    """

    def __init__(self, spec: Optional[BackboneSpec] = None):
        self.spec = spec or BackboneSpec()
        self._weights: Dict[int, Tuple[np.ndarray, ...]] = {}

    @property
    def id(self) -> str:
        return self.spec.to_string()

    def conv_weights(self, in_channels: int) -> Tuple[np.ndarray, ...]:
        """Frozen He-scaled random kernels; a pure function of seed and input channels."""
        if in_channels not in self._weights:
            rng = np.random.default_rng(self.spec.seed)
            kernel = self.spec.kernel
            layers = []
            c_in = in_channels
            for c_out in self.spec.layer_channels():
                scale = math.sqrt(2.0 / (c_in * kernel * kernel))
                layers.append(rng.normal(0.0, scale, size=(c_out, c_in, kernel, kernel)))
                c_in = c_out
            self._weights[in_channels] = tuple(layers)
        return self._weights[in_channels]

    def output_shape(self, input_shape: Tuple[int, int, int, int]) -> Tuple[int, int, int, int]:
        """Feature map shape for a given frame tensor shape, computed from the spec alone."""
        n, c, h, w = input_shape
        if self.spec.kind == "rand-conv":
            for c_out, stride in zip(self.spec.layer_channels(), self.spec.layer_strides()):
                c, h, w = c_out, conv_output_size(h, stride), conv_output_size(w, stride)
        return (n, c, h, w)

    def tensor_path(self, video_id: Optional[str]) -> Path:
        path = Path(self.spec.path)
        if path.is_dir():
            if not video_id:
                raise ConfigError(f"Backbone directory {path} needs a video id to pick a tensor file")
            return path / f"{video_id}{TENSOR_SUFFIX}"
        return path

    def featurize(self, frames=None, video_id: Optional[str] = None) -> np.ndarray:
        """
        Map an N x c_in x H x W frame tensor to N x C x H' x W' feature maps.

        For tensor-file backbones frames may be None; when given, the stored
        tensor must have the same frame count.
        """
        if self.spec.kind == "tensor-file":
            maps = read_tensor_file(self.tensor_path(video_id))
            if frames is not None and maps.shape[0] != np.shape(frames)[0]:
                raise FormatError(
                    f"Tensor file for {video_id or self.spec.path} holds {maps.shape[0]} frames, "
                    f"expected {np.shape(frames)[0]}"
                )
            return maps.astype(np.float64)

        x = np.asarray(frames, dtype=np.float64)
        if x.ndim != 4:
            raise ShapeError(f"Frames must be an N x c x H x W tensor, got shape {x.shape}")
        if self.spec.kind == "identity":
            return x
        for weights, stride in zip(self.conv_weights(x.shape[1]), self.spec.layer_strides()):
            x = np.maximum(_conv2d(x, weights, stride), 0.0)
        return x


def featurize(frames, spec: BackboneSpec, video_id: Optional[str] = None) -> np.ndarray:
    """Run a one-off backbone built from spec over a frame tensor."""
    return Backbone(spec).featurize(frames, video_id=video_id)
