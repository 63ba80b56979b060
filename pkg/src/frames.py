"""
Frame ingestion: uniform sampling, image I/O, cropping and normalization.

In memory a frame is an H x W (grayscale) or H x W x 3 float64 array with
intensities in [0, 1]. preprocess turns it into a channel-first 3 x T x T
tensor normalized with the ImageNet statistics.
"""

import logging
from io import BytesIO
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

try:
    from atomic_io import atomic_write_bytes
    from errors import ConfigError, GeometryError, IngestionError
    from models import CropBox, VideoSample, resolve_frame_path
except ImportError:
    from .atomic_io import atomic_write_bytes
    from .errors import ConfigError, GeometryError, IngestionError
    from .models import CropBox, VideoSample, resolve_frame_path

logger = logging.getLogger(__name__)

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


def sample_indices(total: int, n: int) -> List[int]:
    """Uniform frame indices floor(j * T / n) for j = 0..n-1, repeating when T < n."""
    if total < 1:
        raise IngestionError("Cannot sample frames from an empty video")
    if n < 1:
        raise ConfigError(f"Frame count must be at least 1, got {n}")
    return [(j * total) // n for j in range(n)]


def sample_frames(video: VideoSample, n: int) -> List[str]:
    """The n uniformly sampled frame paths of a video, in order."""
    if not video.frames:
        raise IngestionError(f"Video {video.id} has no frames")
    return [video.frames[i] for i in sample_indices(len(video.frames), n)]


def load_frame(path) -> np.ndarray:
    """Read an 8-bit (or 16-bit grayscale) image as floats in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as image:
            image.load()
            if image.mode in ("L", "P", "1", "LA"):
                values = np.asarray(image.convert("L"), dtype=np.float64) / 255.0
            elif image.mode in ("I;16", "I;16B", "I;16L", "I"):
                values = np.asarray(image, dtype=np.float64)
                values = values / (65535.0 if values.max(initial=0) > 255 else 255.0)
            else:
                values = np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0
    except (OSError, IOError, ValueError) as e:
        raise IngestionError(f"Cannot read frame {path}: {e}") from e
    return values


def save_frame(path, frame) -> Path:
    """Write a [0, 1] frame as an 8-bit PNG (or PGM, by suffix)."""
    values = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    pixels = np.round(values * 255.0).astype(np.uint8)
    image = Image.fromarray(pixels)
    fmt = "PPM" if Path(path).suffix.lower() in (".pgm", ".ppm") else "PNG"
    buffer = BytesIO()
    image.save(buffer, format=fmt)
    return atomic_write_bytes(path, buffer.getvalue())


def as_unit_image(frame) -> np.ndarray:
    """Accept uint8 or float frames, return float64 in [0, 1] (H x W or H x W x c)."""
    values = np.asarray(frame)
    if values.dtype == np.uint8:
        return values.astype(np.float64) / 255.0
    values = values.astype(np.float64)
    if values.ndim not in (2, 3):
        raise ConfigError(f"Frames must be H x W or H x W x c arrays, got shape {values.shape}")
    return values


def crop(frame, box: Optional[CropBox]) -> np.ndarray:
    """Cut the box out of a frame; the box must lie inside it."""
    values = np.asarray(frame)
    if box is None:
        return values
    height, width = values.shape[:2]
    if not box.fits(height, width):
        raise GeometryError(
            f"Crop box {box.to_list()} exceeds the {width}x{height} frame"
        )
    return values[box.y:box.y + box.h, box.x:box.x + box.w]


def resize_bilinear(frame: np.ndarray, target: int) -> np.ndarray:
    """Bilinear resize of every channel to target x target; a no-op at the target size."""
    if frame.shape[0] == target and frame.shape[1] == target:
        return frame
    planes = frame[..., None] if frame.ndim == 2 else frame
    resized = []
    for c in range(planes.shape[2]):
        image = Image.fromarray(np.ascontiguousarray(planes[..., c], dtype=np.float32))
        resized.append(np.asarray(image.resize((target, target), Image.Resampling.BILINEAR), dtype=np.float64))
    out = np.stack(resized, axis=-1)
    return out[..., 0] if frame.ndim == 2 else out


def preprocess(frame, box: Optional[CropBox] = None, target: int = 64) -> np.ndarray:
    """
    Crop, resize and normalize a frame into a 3 x T x T tensor.

    Grayscale (NIR) frames are replicated to three channels before the
    per-channel (x - mean) / std normalization.

    Raises:
        GeometryError: If the crop box exceeds the frame
    """
    if target < 1:
        raise ConfigError(f"Target size must be positive, got {target}")
    values = resize_bilinear(crop(as_unit_image(frame), box), target)
    if values.ndim == 2:
        values = np.repeat(values[..., None], 3, axis=2)
    elif values.shape[2] == 1:
        values = np.repeat(values, 3, axis=2)
    elif values.shape[2] == 4:
        values = values[..., :3]
    if values.shape[2] != 3:
        raise ConfigError(f"Frames must have 1 or 3 channels, got {values.shape[2]}")
    normalized = (values - IMAGENET_MEAN) / IMAGENET_STD
    return np.ascontiguousarray(normalized.transpose(2, 0, 1))


def load_video_frames(
    video: VideoSample, n: int, target: int = 64, base_dir: Optional[Path] = None
) -> np.ndarray:
    """Sample, read and preprocess n frames of a video into an n x 3 x T x T tensor."""
    indices = sample_indices(len(video.frames), n)
    tensors = []
    for index in indices:
        path = resolve_frame_path(video.frames[index], base_dir)
        try:
            tensors.append(preprocess(load_frame(path), video.crop_for(index), target))
        except GeometryError as e:
            raise GeometryError(f"Video {video.id}, frame {index}: {e}") from e
    logger.debug("Loaded %d frames of video %s", len(tensors), video.id)
    return np.stack(tensors)
