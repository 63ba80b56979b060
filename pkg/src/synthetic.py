"""
Synthetic real/fake video corpus with upsampling artifacts.

Real videos are temporally correlated smooth random fields rendered at full
resolution. Fake videos come from the same process rendered at size / factor
and upsampled (nearest or bilinear), which plants periodic spectral replicas
in the high frequencies, the grid artifact the pipeline is built to amplify.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

try:
    from dataset_manager import DatasetManager
    from errors import ConfigError
    from frames import save_frame
    from models import DatasetManifest, VideoSample
except ImportError:
    from .dataset_manager import DatasetManager
    from .errors import ConfigError
    from .frames import save_frame
    from .models import DatasetManifest, VideoSample

logger = logging.getLogger(__name__)

UPSAMPLE_FACTORS = (2, 4)
UPSAMPLE_MODES = ("nearest", "bilinear")


@dataclass(frozen=True)
class SynthConfig:
    """
    Settings of the synthetic corpus.

    Attributes:
        count_per_class: Videos per label
        size: Frame side length in pixels
        factor: Upsampling factor of fake videos (2 or 4)
        mode: Upsampling interpolation of fake videos
        frames: Frames per video
        seed: Corpus seed
        smoothness: Gaussian blur sigma of the field, in full-resolution pixels
        temporal: Frame-to-frame correlation of the underlying noise
        spread: Standard deviation of pixel intensities around mid-gray
    """

    count_per_class: int = 100
    size: int = 64
    factor: int = 2
    mode: str = "nearest"
    frames: int = 16
    seed: int = 0
    smoothness: float = 1.0
    temporal: float = 0.8
    spread: float = 0.12

    def __post_init__(self):
        if self.factor not in UPSAMPLE_FACTORS:
            raise ConfigError(
                f"Upsample factor must be one of {UPSAMPLE_FACTORS}, got {self.factor}"
            )
        if self.size < 1 or self.size % self.factor != 0:
            raise ConfigError(f"Size {self.size} is not divisible by factor {self.factor}")
        if self.mode not in UPSAMPLE_MODES:
            raise ConfigError(f"Upsample mode must be one of {UPSAMPLE_MODES}, got {self.mode!r}")
        if self.count_per_class < 1 or self.frames < 1:
            raise ConfigError("Corpus needs at least one video per class and one frame per video")
        if not 0 <= self.temporal < 1:
            raise ConfigError(f"Temporal correlation must be in [0, 1), got {self.temporal}")
        if not self.smoothness > 0 or not self.spread > 0:
            raise ConfigError("smoothness and spread must be positive")

    def to_dict(self) -> dict:
        return {
            "count_per_class": self.count_per_class,
            "size": self.size,
            "factor": self.factor,
            "mode": self.mode,
            "frames": self.frames,
            "seed": self.seed,
            "smoothness": self.smoothness,
            "temporal": self.temporal,
            "spread": self.spread,
        }


def smooth_field_sequence(rng: np.random.Generator, frames: int, size: int, sigma: float, rho: float) -> np.ndarray:
    """AR(1)-correlated white noise, Gaussian blurred per frame, scaled to unit std."""
    innovation = np.sqrt(1.0 - rho * rho)
    state = rng.standard_normal((size, size))
    fields = []
    for t in range(frames):
        if t > 0:
            state = rho * state + innovation * rng.standard_normal((size, size))
        fields.append(gaussian_filter(state, sigma, mode="reflect"))
    stack = np.stack(fields)
    return stack / stack.std()


def upsample(frame: np.ndarray, factor: int, mode: str) -> np.ndarray:
    if mode == "nearest":
        return np.repeat(np.repeat(frame, factor, axis=0), factor, axis=1)
    size = (frame.shape[1] * factor, frame.shape[0] * factor)
    image = Image.fromarray(np.ascontiguousarray(frame, dtype=np.float32))
    return np.asarray(image.resize(size, Image.Resampling.BILINEAR), dtype=np.float64)


def render_video(config: SynthConfig, fake: bool, index: int) -> np.ndarray:
    """Frames of one synthetic video as a frames x size x size array in [0, 1]."""
    rng = np.random.default_rng([config.seed, int(fake), index])
    if fake:
        low = config.size // config.factor
        fields = smooth_field_sequence(
            rng, config.frames, low, config.smoothness / config.factor, config.temporal
        )
        fields = np.stack([upsample(f, config.factor, config.mode) for f in fields])
    else:
        fields = smooth_field_sequence(rng, config.frames, config.size, config.smoothness, config.temporal)
    return np.clip(0.5 + config.spread * fields, 0.0, 1.0)


def synth_corpus(out_dir, config: SynthConfig, fingerprint: str = "") -> DatasetManifest:
    """
    Render the corpus as PNG frames under out_dir and write out_dir/manifest.jsonl.

    fingerprint is stored in the manifest sidecar.

    Returns:
        The manifest, with frame paths relative to out_dir
    """
    out_dir = Path(out_dir)
    videos = []
    for label in ("real", "fake"):
        for index in range(config.count_per_class):
            video_id = f"{label}_{index:04d}"
            frames = []
            for t, frame in enumerate(render_video(config, label == "fake", index)):
                relative = Path(video_id) / f"frame_{t:04d}.png"
                save_frame(out_dir / relative, frame)
                frames.append(relative.as_posix())
            videos.append(VideoSample(id=video_id, label=label, frames=frames))
    provenance = (
        f"synthetic corpus seed={config.seed} size={config.size} "
        f"factor={config.factor} mode={config.mode} frames={config.frames}"
    )
    manifest = DatasetManifest(videos=videos, provenance=provenance, fingerprint=fingerprint)
    DatasetManager(out_dir / "manifest.jsonl").save(manifest)
    logger.info("Synthesized %d videos into %s", len(videos), out_dir)
    return manifest
