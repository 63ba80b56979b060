"""
Data models for the freqclue feature pipeline.

This module contains the core data structures shared across the pipeline:
dataset entries, perturbation and pipeline settings, block grids, backbone
specifications and the fused per-video feature, all as dataclasses with
validation and JSON-friendly serialization.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

try:
    from errors import ConfigError, DataCorruptionError, InvalidInputError
except ImportError:
    from .errors import ConfigError, DataCorruptionError, InvalidInputError


SQRT2 = math.sqrt(2.0)

LABELS = ("real", "fake")
SPLITS = ("", "train", "val", "test")
REDUCTIONS = ("max", "min", "avg", "absmax")
ATTENTION_MODES = ("fta", "uniform")
PERTURBATION_KINDS = ("gaussian-blur", "gaussian-noise", "jpeg-like", "contrast")
BACKBONE_KINDS = ("identity", "rand-conv", "tensor-file")


def compute_fingerprint(settings: Dict[str, Any]) -> str:
    """Hash a settings dictionary into a short, stable hex fingerprint."""
    canonical = json.dumps(settings, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def label_to_int(label: Union[str, int, bool]) -> int:
    """Map a label to the positive-class convention: fake is 1, real is 0."""
    if isinstance(label, (bool, np.bool_)):
        return int(label)
    if isinstance(label, (int, np.integer)):
        if label in (0, 1):
            return int(label)
        raise ConfigError(f"Numeric label must be 0 or 1, got {label}")
    if label == "fake":
        return 1
    if label == "real":
        return 0
    raise ConfigError(f"Label must be one of {LABELS}, got {label!r}")


@dataclass(frozen=True)
class CropBox:
    """
    Pixel rectangle selecting the face region of a frame.

    Attributes:
        x: Left column of the box
        y: Top row of the box
        w: Width in pixels
        h: Height in pixels
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ConfigError(f"Crop origin must be non-negative, got ({self.x}, {self.y})")
        if self.w <= 0 or self.h <= 0:
            raise ConfigError(f"Crop size must be positive, got {self.w}x{self.h}")

    def fits(self, height: int, width: int) -> bool:
        """Check whether the box lies inside a height x width frame."""
        return self.x + self.w <= width and self.y + self.h <= height

    def to_list(self) -> List[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values: Sequence[int]) -> "CropBox":
        if len(values) != 4:
            raise ConfigError(f"Crop box needs 4 values (x, y, w, h), got {list(values)}")
        return cls(*(int(v) for v in values))


@dataclass
class VideoSample:
    """
    A single video of the dataset, stored as an ordered list of frame files.

    Attributes:
        id: Identifier, unique within a manifest
        label: "real" or "fake"
        frames: Ordered frame file paths
        crop: Optional crop box for every frame, or one box per frame
        split: Optional split tag ("train", "val", "test")
    """

    id: str
    label: str
    frames: List[str]
    crop: Optional[Union[CropBox, List[CropBox]]] = None
    split: str = ""

    def __post_init__(self):
        if not self.id or not str(self.id).strip():
            raise ConfigError("Video id cannot be empty")
        self.id = str(self.id).strip()
        if self.label not in LABELS:
            raise ConfigError(f"Video {self.id}: label must be one of {LABELS}, got {self.label!r}")
        if not self.frames:
            raise ConfigError(f"Video {self.id}: at least one frame is required")
        if self.split not in SPLITS:
            raise ConfigError(f"Video {self.id}: unknown split {self.split!r}")
        if isinstance(self.crop, list) and len(self.crop) != len(self.frames):
            raise ConfigError(
                f"Video {self.id}: {len(self.crop)} crop boxes for {len(self.frames)} frames"
            )

    def crop_for(self, frame_index: int) -> Optional[CropBox]:
        """Return the crop box that applies to a given frame, if any."""
        if self.crop is None:
            return None
        if isinstance(self.crop, list):
            return self.crop[frame_index]
        return self.crop

    def to_dict(self) -> dict:
        data = {"id": self.id, "label": self.label, "frames": list(self.frames)}
        if self.crop is not None:
            if isinstance(self.crop, list):
                data["crop"] = [box.to_list() for box in self.crop]
            else:
                data["crop"] = self.crop.to_list()
        if self.split:
            data["split"] = self.split
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "VideoSample":
        crop = data.get("crop")
        if crop is not None:
            if crop and isinstance(crop[0], (list, tuple)):
                crop = [CropBox.from_list(box) for box in crop]
            else:
                crop = CropBox.from_list(crop)
        return cls(
            id=data["id"],
            label=data["label"],
            frames=list(data["frames"]),
            crop=crop,
            split=data.get("split", ""),
        )


@dataclass
class DatasetManifest:
    """
    A list of videos together with its split tag and provenance note.

    Attributes:
        videos: The videos, in manifest order
        split: Split tag shared by the manifest ("" when mixed)
        provenance: Free text describing where the data came from
        fingerprint: Fingerprint of the run that wrote the manifest
    """

    videos: List[VideoSample] = field(default_factory=list)
    split: str = ""
    provenance: str = ""
    fingerprint: str = ""

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigError(f"Unknown manifest split {self.split!r}")
        seen = set()
        for video in self.videos:
            if video.id in seen:
                raise DataCorruptionError(f"Duplicate video id in manifest: {video.id}")
            seen.add(video.id)

    def __len__(self) -> int:
        return len(self.videos)

    def __iter__(self):
        return iter(self.videos)

    def get(self, video_id: str) -> Optional[VideoSample]:
        for video in self.videos:
            if video.id == video_id:
                return video
        return None

    def count_by_label(self) -> Dict[str, int]:
        counts = {label: 0 for label in LABELS}
        for video in self.videos:
            counts[video.label] += 1
        return counts

    def metadata_dict(self) -> dict:
        return {
            "split": self.split,
            "provenance": self.provenance,
            "fingerprint": self.fingerprint,
            "total_videos": len(self.videos),
            "labels": self.count_by_label(),
        }


@dataclass(frozen=True)
class PerturbationSpec:
    """
    One degradation applied to frames.

    Attributes:
        kind: gaussian-blur, gaussian-noise, jpeg-like or contrast
        sigma: Standard deviation for blur (pixels) or noise (intensity units)
        radius: Blur kernel radius in pixels; derived from sigma when None
        quality: JPEG-like quality in [1, 100]
        gain: Contrast gain around mid-gray
        seed: Seed for stochastic kinds
    """

    kind: str
    sigma: Optional[float] = None
    radius: Optional[int] = None
    quality: Optional[int] = None
    gain: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ConfigError(f"Unknown perturbation kind {self.kind!r}")
        if self.kind == "gaussian-blur":
            if self.sigma is None or not self.sigma > 0:
                raise ConfigError("gaussian-blur needs sigma > 0")
            if self.radius is not None and self.radius < 1:
                raise ConfigError("gaussian-blur radius must be at least 1")
        elif self.kind == "gaussian-noise":
            # sigma == 0 is accepted and yields the identity
            if self.sigma is None or self.sigma < 0:
                raise ConfigError("gaussian-noise needs sigma >= 0")
        elif self.kind == "jpeg-like":
            if self.quality is None or not 1 <= self.quality <= 100:
                raise ConfigError("jpeg-like needs quality in [1, 100]")
        elif self.kind == "contrast":
            if self.gain is None or not self.gain > 0:
                raise ConfigError("contrast needs gain > 0")

    @property
    def kernel_radius(self) -> int:
        if self.radius is not None:
            return self.radius
        return max(1, int(math.ceil(3.0 * self.sigma)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "radius": self.radius,
            "quality": self.quality,
            "gain": self.gain,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PerturbationSpec":
        return cls(
            kind=data["kind"],
            sigma=data.get("sigma"),
            radius=data.get("radius"),
            quality=data.get("quality"),
            gain=data.get("gain"),
            seed=data.get("seed", 0),
        )


@dataclass(frozen=True)
class BlockGrid:
    """A rows x cols tiling of a spectrum into K = rows * cols blocks."""

    rows: int = 4
    cols: int = 4

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"Block grid must be positive, got {self.rows}x{self.cols}")

    @property
    def k(self) -> int:
        return self.rows * self.cols

    def __str__(self) -> str:
        return f"{self.rows}x{self.cols}"

    @classmethod
    def parse(cls, text: str) -> "BlockGrid":
        """Parse an "RxC" string such as "4x4"."""
        parts = str(text).lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"Block grid must look like RxC, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError:
            raise ConfigError(f"Block grid must look like RxC, got {text!r}") from None


def _parse_schedule(text: str, name: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(v) for v in str(text).split("-"))
    except ValueError:
        raise ConfigError(f"Backbone {name} must be integers joined by '-', got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"Backbone {name} must be positive, got {text!r}")
    return values


@dataclass(frozen=True)
class BackboneSpec:
    """
    Which per-frame feature extractor feeds the frequency pipeline.

    identity passes frames through, rand-conv is a frozen random convolution
    stack fully determined by its seed, tensor-file loads precomputed maps.
    """

    kind: str = "identity"
    layers: int = 2
    channels: Tuple[int, ...] = (8,)
    strides: Tuple[int, ...] = (2,)
    kernel: int = 3
    seed: int = 0
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in BACKBONE_KINDS:
            raise ConfigError(f"Unknown backbone kind {self.kind!r}")
        if self.kind == "rand-conv":
            if self.layers < 1:
                raise ConfigError("rand-conv needs at least one layer")
            for name, schedule in (("channels", self.channels), ("strides", self.strides)):
                if len(schedule) not in (1, self.layers):
                    raise ConfigError(
                        f"rand-conv {name} schedule has {len(schedule)} entries for {self.layers} layers"
                    )
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise ConfigError("rand-conv kernel size must be a positive odd integer")
        if self.kind == "tensor-file" and not self.path:
            raise ConfigError("tensor-file backbone needs a path")

    def layer_channels(self) -> Tuple[int, ...]:
        return self.channels * self.layers if len(self.channels) == 1 else self.channels

    def layer_strides(self) -> Tuple[int, ...]:
        return self.strides * self.layers if len(self.strides) == 1 else self.strides

    def to_string(self) -> str:
        """Canonical text form, also used as the backbone id in feature metadata."""
        if self.kind == "identity":
            return "identity"
        if self.kind == "tensor-file":
            return f"file:{self.path}"
        return (
            f"randconv:layers={self.layers},"
            f"channels={'-'.join(str(c) for c in self.channels)},"
            f"strides={'-'.join(str(s) for s in self.strides)},"
            f"kernel={self.kernel},seed={self.seed}"
        )

    @classmethod
    def parse(cls, text: str) -> "BackboneSpec":
        """
        Parse the CLI form of a backbone.

        Accepted forms: "identity", "file:<path>" and
        "randconv:layers=2,channels=8,strides=2,kernel=3,seed=0" (every key
        optional, schedules written as "8-16").
        """
        text = str(text).strip()
        if text == "identity":
            return cls(kind="identity")
        if text.startswith("file:"):
            return cls(kind="tensor-file", path=text[len("file:"):])
        if text == "randconv" or text.startswith("randconv:"):
            options = {}
            body = text[len("randconv:"):] if ":" in text else ""
            for item in filter(None, body.split(",")):
                if "=" not in item:
                    raise ConfigError(f"Malformed randconv option {item!r}")
                key, value = item.split("=", 1)
                options[key.strip()] = value.strip()
            unknown = set(options) - {"layers", "channels", "strides", "kernel", "seed"}
            if unknown:
                raise ConfigError(f"Unknown randconv options: {sorted(unknown)}")
            try:
                return cls(
                    kind="rand-conv",
                    layers=int(options.get("layers", 2)),
                    channels=_parse_schedule(options.get("channels", "8"), "channels"),
                    strides=_parse_schedule(options.get("strides", "2"), "strides"),
                    kernel=int(options.get("kernel", 3)),
                    seed=int(options.get("seed", 0)),
                )
            except ValueError as e:
                if isinstance(e, ConfigError):
                    raise
                raise ConfigError(f"Malformed randconv spec {text!r}: {e}") from None
        raise ConfigError(f"Unknown backbone {text!r}; use identity, randconv:<spec> or file:<path>")


@dataclass(frozen=True)
class PipelineConfig:
    """
    Settings of the frequency feature pipeline.

    Attributes:
        frames: Number of frames N sampled per video
        grid: Block grid, K = rows * cols
        beta: Base of the band weight matrix
        reduction: Per-block reduction of the compact feature
        attention: "fta" for frequency temporal attention, "uniform" for 1/K weights
        backbone: Per-frame feature extractor
        epsilon: Guard added to every normalization denominator
        target_size: Side length frames are resized to before the backbone
    """

    frames: int = 16
    grid: BlockGrid = field(default_factory=BlockGrid)
    beta: float = SQRT2
    reduction: str = "max"
    attention: str = "fta"
    backbone: BackboneSpec = field(default_factory=BackboneSpec)
    epsilon: float = 1e-12
    target_size: int = 64

    def __post_init__(self):
        if self.frames < 1:
            raise ConfigError(f"Frame count must be at least 1, got {self.frames}")
        if not self.beta > 0 or not math.isfinite(self.beta):
            raise ConfigError(f"beta must be a positive finite number, got {self.beta}")
        if self.reduction not in REDUCTIONS:
            raise ConfigError(f"Reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        if self.attention not in ATTENTION_MODES:
            raise ConfigError(f"Attention must be one of {ATTENTION_MODES}, got {self.attention!r}")
        if self.epsilon < 0 or not math.isfinite(self.epsilon):
            raise ConfigError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.target_size < 1:
            raise ConfigError(f"Target size must be positive, got {self.target_size}")

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "blocks": str(self.grid),
            "beta": self.beta,
            "reduction": self.reduction,
            "attention": self.attention,
            "backbone": self.backbone.to_string(),
            "epsilon": self.epsilon,
            "target_size": self.target_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        defaults = cls()
        return cls(
            frames=int(data.get("frames", defaults.frames)),
            grid=BlockGrid.parse(data.get("blocks", str(defaults.grid))),
            beta=float(data.get("beta", defaults.beta)),
            reduction=data.get("reduction", defaults.reduction),
            attention=data.get("attention", defaults.attention),
            backbone=BackboneSpec.parse(data.get("backbone", "identity")),
            epsilon=float(data.get("epsilon", defaults.epsilon)),
            target_size=int(data.get("target_size", defaults.target_size)),
        )

    def fingerprint(self) -> str:
        return compute_fingerprint(self.to_dict())


@dataclass
class FusedFeature:
    """
    Final spatial-temporal frequency feature f of one video.

    Attributes:
        video_id: Source video id
        values: Fused vector, one value per channel C
        frames: Frame count N that produced it
        blocks: Block count K
        beta: Weight matrix base
        backbone: Backbone id
        label: Optional "real"/"fake" label
        fingerprint: Fingerprint of the pipeline settings
    """

    video_id: str
    values: np.ndarray
    frames: int = 0
    blocks: int = 0
    beta: float = SQRT2
    backbone: str = "identity"
    label: Optional[str] = None
    fingerprint: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise InvalidInputError(
                f"Feature {self.video_id}: expected a vector, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError(f"Feature {self.video_id}: contains non-finite values")
        if self.label is not None and self.label not in LABELS:
            raise ConfigError(f"Feature {self.video_id}: unknown label {self.label!r}")

    @property
    def channels(self) -> int:
        return int(self.values.shape[0])

    def to_dict(self) -> dict:
        return {
            "id": self.video_id,
            "label": self.label,
            "fingerprint": self.fingerprint,
            "frames": self.frames,
            "blocks": self.blocks,
            "beta": self.beta,
            "backbone": self.backbone,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FusedFeature":
        return cls(
            video_id=data["id"],
            values=np.asarray(data["values"], dtype=np.float64),
            frames=int(data.get("frames", 0)),
            blocks=int(data.get("blocks", 0)),
            beta=float(data.get("beta", SQRT2)),
            backbone=data.get("backbone", "identity"),
            label=data.get("label"),
            fingerprint=data.get("fingerprint", ""),
        )


def resolve_frame_path(frame: str, base_dir: Optional[Path]) -> Path:
    """Resolve a manifest frame path relative to the manifest directory."""
    path = Path(frame)
    if path.is_absolute() or base_dir is None:
        return path
    return Path(base_dir) / path
