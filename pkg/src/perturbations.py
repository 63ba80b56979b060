"""
Perturbation suite: Gaussian blur, Gaussian white noise, JPEG-like
compression and contrast change, applied to [0, 1] frames.

Stochastic perturbations draw from a seed derived from (corpus seed, video
id, frame index), so results do not depend on processing order.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.ndimage import convolve1d

try:
    from dct_engine import dct2_batch
    from frames import as_unit_image, load_frame, save_frame
    from models import DatasetManifest, PerturbationSpec, VideoSample, resolve_frame_path
except ImportError:
    from .dct_engine import dct2_batch
    from .frames import as_unit_image, load_frame, save_frame
    from .models import DatasetManifest, PerturbationSpec, VideoSample, resolve_frame_path

logger = logging.getLogger(__name__)

JPEG_BLOCK = 8

# Luminance quantization table of the JPEG standard (Annex K)
ANNEX_K_LUMINANCE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def derive_frame_seed(seed: int, video_id: str, frame_index: int) -> int:
    """Stable 63-bit seed for one frame of one video."""
    digest = hashlib.sha256(f"{seed}:{video_id}:{frame_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def quality_table(quality: int) -> np.ndarray:
    """Annex K luminance table scaled the conventional (IJG) way for a quality in [1, 100]."""
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    table = np.floor((ANNEX_K_LUMINANCE * scale + 50.0) / 100.0)
    return np.clip(table, 1.0, 255.0)


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Normalized, symmetric 1D Gaussian of length 2 * radius + 1."""
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(frame, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian convolution over rows and columns with reflect padding."""
    values = as_unit_image(frame)
    kernel = gaussian_kernel(sigma, radius)
    blurred = convolve1d(values, kernel, axis=0, mode="reflect")
    return convolve1d(blurred, kernel, axis=1, mode="reflect")


def gaussian_noise(frame, sigma: float, seed: int) -> np.ndarray:
    values = as_unit_image(frame)
    if sigma == 0:
        return values.copy()
    rng = np.random.default_rng(seed)
    return np.clip(values + rng.normal(0.0, sigma, size=values.shape), 0.0, 1.0)


def _jpeg_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    height, width = plane.shape
    pad_h = (-height) % JPEG_BLOCK
    pad_w = (-width) % JPEG_BLOCK
    padded = np.pad(plane * 255.0 - 128.0, ((0, pad_h), (0, pad_w)), mode="edge")
    rows, cols = padded.shape[0] // JPEG_BLOCK, padded.shape[1] // JPEG_BLOCK
    blocks = padded.reshape(rows, JPEG_BLOCK, cols, JPEG_BLOCK).transpose(0, 2, 1, 3)
    blocks = blocks.reshape(rows * cols, 1, JPEG_BLOCK, JPEG_BLOCK)
    coefficients = dct2_batch(blocks)
    dequantized = np.round(coefficients / table) * table
    restored = dct2_batch(dequantized, inverse=True)
    restored = restored.reshape(rows, cols, JPEG_BLOCK, JPEG_BLOCK).transpose(0, 2, 1, 3)
    restored = restored.reshape(padded.shape)[:height, :width]
    return np.clip((restored + 128.0) / 255.0, 0.0, 1.0)


def jpeg_like(frame, quality: int) -> np.ndarray:
    """
    Blockwise DCT quantization round trip, applied to each channel independently.

    Chroma subsampling and entropy coding are not modelled.
    """
    values = as_unit_image(frame)
    table = quality_table(quality)
    if values.ndim == 2:
        return _jpeg_plane(values, table)
    return np.stack([_jpeg_plane(values[..., c], table) for c in range(values.shape[2])], axis=-1)


def contrast(frame, gain: float) -> np.ndarray:
    values = as_unit_image(frame)
    return np.clip(gain * (values - 0.5) + 0.5, 0.0, 1.0)


def perturb(frame, spec: PerturbationSpec, seed: Optional[int] = None) -> np.ndarray:
    """
    Apply one perturbation to a frame.

    Args:
        frame: H x W or H x W x c image, uint8 or float in [0, 1]
        spec: What to apply
        seed: Overrides spec.seed for stochastic kinds (per-frame seeds)
    """
    if spec.kind == "gaussian-blur":
        return gaussian_blur(frame, spec.sigma, spec.kernel_radius)
    if spec.kind == "gaussian-noise":
        return gaussian_noise(frame, spec.sigma, spec.seed if seed is None else seed)
    if spec.kind == "jpeg-like":
        return jpeg_like(frame, spec.quality)
    return contrast(frame, spec.gain)


def perturb_video(
    video: VideoSample, spec: PerturbationSpec, out_dir: Path, base_dir: Optional[Path] = None
) -> VideoSample:
    """Perturb every frame of a video into out_dir/<id>/ and return the new sample."""
    frames = []
    for index, frame in enumerate(video.frames):
        source = resolve_frame_path(frame, base_dir)
        perturbed = perturb(load_frame(source), spec, derive_frame_seed(spec.seed, video.id, index))
        relative = Path(video.id) / f"frame_{index:04d}.png"
        save_frame(Path(out_dir) / relative, perturbed)
        frames.append(relative.as_posix())
    return VideoSample(id=video.id, label=video.label, frames=frames, crop=video.crop, split=video.split)


def perturb_manifest(
    manifest: DatasetManifest,
    spec: PerturbationSpec,
    out_dir,
    base_dir: Optional[Path] = None,
    workers: int = 1,
) -> DatasetManifest:
    """
    Write a perturbed copy of every video under out_dir.

    Frame paths in the returned manifest are relative to out_dir, where the
    new manifest is expected to live.
    """
    out_dir = Path(out_dir)

    def run(video: VideoSample) -> VideoSample:
        return perturb_video(video, spec, out_dir, base_dir)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            videos = list(pool.map(run, manifest.videos))
    else:
        videos = [run(video) for video in manifest.videos]
    logger.info("Perturbed %d videos with %s", len(videos), spec.kind)
    note = f"{manifest.provenance}; perturbed {spec.to_dict()}".lstrip("; ")
    return DatasetManifest(videos=videos, split=manifest.split, provenance=note)
