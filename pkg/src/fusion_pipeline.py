"""
End-to-end frequency feature extraction.

backbone -> batch DCT -> band weighting -> (compact feature, attention) -> fuse

Both branches read the same weighted spectrum, computed once per video. The
fused vector is emitted raw; standardization belongs to the classifier.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

try:
    from backbone import Backbone
    from cfe import CompactFeature, compact
    from dct_engine import dct2_batch
    from errors import FormatError, FreqClueError, ShapeError
    from frames import load_video_frames
    from fta import AttentionMap, attention, uniform_attention
    from models import FusedFeature, PipelineConfig, VideoSample
    from performance_manager import PerformanceMonitor
    from spectral_weighting import apply_weights, build_weight_matrix
except ImportError:
    from .backbone import Backbone
    from .cfe import CompactFeature, compact
    from .dct_engine import dct2_batch
    from .errors import FormatError, FreqClueError, ShapeError
    from .frames import load_video_frames
    from .fta import AttentionMap, attention, uniform_attention
    from .models import FusedFeature, PipelineConfig, VideoSample
    from .performance_manager import PerformanceMonitor
    from .spectral_weighting import apply_weights, build_weight_matrix

logger = logging.getLogger(__name__)


def fuse(compact_feature, attention_map) -> np.ndarray:
    """
    Attention-weighted sum over frames and blocks.

    out[c] = sum over n, k of compact[n, c, k] * attention[n, k]

    Args:
        compact_feature: CompactFeature or N x C x K array
        attention_map: AttentionMap or N x K array

    Returns:
        Length-C float64 vector

    Raises:
        ShapeError: If N or K differ between the inputs
    """
    values = np.asarray(getattr(compact_feature, "values", compact_feature), dtype=np.float64)
    weights = np.asarray(getattr(attention_map, "values", attention_map), dtype=np.float64)
    if values.ndim != 3 or weights.ndim != 2:
        raise ShapeError(
            f"fuse needs an N x C x K compact feature and an N x K attention map, "
            f"got shapes {values.shape} and {weights.shape}"
        )
    if values.shape[0] != weights.shape[0] or values.shape[2] != weights.shape[1]:
        raise ShapeError(
            f"Compact feature (N={values.shape[0]}, K={values.shape[2]}) does not match "
            f"attention map (N={weights.shape[0]}, K={weights.shape[1]})"
        )
    return np.einsum("nck,nk->c", values, weights)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Intermediate tensors of one extraction, kept for inspection."""

    values: np.ndarray
    raw_spectrum: np.ndarray
    spectrum: np.ndarray
    compact: CompactFeature
    attention: AttentionMap


class FrequencyPipeline:
    """
    Extracts fused frequency features for videos under one PipelineConfig.

    The backbone and the weight matrices are shared by all videos, so a single
    instance can serve a thread pool.
    """

    def __init__(
        self,
        config: Optional[PipelineConfig] = None,
        backbone: Optional[Backbone] = None,
        monitor: Optional[PerformanceMonitor] = None,
    ):
        self.config = config or PipelineConfig()
        self.backbone = backbone or Backbone(self.config.backbone)
        self.monitor = monitor or PerformanceMonitor()
        self.fingerprint = self.config.fingerprint()

    def run_maps(self, maps, workers: int = 1) -> PipelineResult:
        """Frequency stages over an N x C x H x W feature map sequence."""
        config = self.config
        with self.monitor.track("dct"):
            spectrum = dct2_batch(maps, workers=workers)
        height, width = spectrum.shape[-2:]
        with self.monitor.track("weighting"):
            weighted = apply_weights(spectrum, build_weight_matrix(height, width, config.beta))
        with self.monitor.track("cfe"):
            compact_feature = compact(weighted, config.grid, config.reduction)
        with self.monitor.track("fta"):
            if config.attention == "uniform":
                attention_map = uniform_attention(weighted.shape[0], config.grid.k)
            else:
                attention_map = attention(weighted, config.grid, config.epsilon)
        with self.monitor.track("fuse"):
            values = fuse(compact_feature, attention_map)
        return PipelineResult(
            values=values,
            raw_spectrum=spectrum,
            spectrum=weighted,
            compact=compact_feature,
            attention=attention_map,
        )

    def run(self, frames, video_id: Optional[str] = None, workers: int = 1) -> PipelineResult:
        """Backbone plus frequency stages over an N x c x H x W frame tensor."""
        with self.monitor.track("featurize"):
            maps = self.backbone.featurize(frames, video_id=video_id)
        return self.run_maps(maps, workers=workers)

    def to_feature(self, video_id: str, label: Optional[str], result: PipelineResult) -> FusedFeature:
        return FusedFeature(
            video_id=video_id,
            values=result.values,
            frames=int(result.compact.shape[0]),
            blocks=self.config.grid.k,
            beta=self.config.beta,
            backbone=self.backbone.id,
            label=label,
            fingerprint=self.fingerprint,
        )

    def featurize_video(self, video: VideoSample, base_dir: Optional[Path] = None) -> np.ndarray:
        """
        Backbone feature maps of one video, config.frames frames long.

        Raises:
            FormatError: If a tensor-file backbone stores a different frame count
        """
        if self.backbone.spec.kind != "tensor-file":
            frames = load_video_frames(video, self.config.frames, self.config.target_size, base_dir)
            return self.backbone.featurize(frames, video_id=video.id)
        maps = self.backbone.featurize(None, video_id=video.id)
        if maps.shape[0] != self.config.frames:
            raise FormatError(
                f"Tensor file for {video.id} holds {maps.shape[0]} frames, "
                f"but the pipeline samples {self.config.frames}"
            )
        return maps

    def analyze(self, video: VideoSample, base_dir: Optional[Path] = None) -> PipelineResult:
        """All intermediate tensors for one video."""
        with self.monitor.track("featurize"):
            maps = self.featurize_video(video, base_dir)
        return self.run_maps(maps)

    def extract(self, video: VideoSample, base_dir: Optional[Path] = None) -> FusedFeature:
        """
        Fused feature of one video with its metadata.

        Raises:
            IngestionError: If frames cannot be read
            FormatError: If stored feature maps hold the wrong frame count
            PartitionError: If the feature maps do not tile by the grid
        """
        try:
            result = self.analyze(video, base_dir)
        except FreqClueError as e:
            if video.id in str(e):
                raise
            raise type(e)(f"Video {video.id}: {e}") from e
        return self.to_feature(video.id, video.label, result)

    def extract_batch(
        self, videos: Sequence[VideoSample], base_dir: Optional[Path] = None, workers: int = 1
    ) -> List[FusedFeature]:
        """Features for many videos, in input order regardless of worker count."""

        def run(video: VideoSample) -> FusedFeature:
            return self.extract(video, base_dir)

        with self.monitor.track("extract_batch", items=len(videos)):
            if workers > 1 and len(videos) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    features = list(pool.map(run, videos))
            else:
                features = [run(video) for video in videos]
        logger.info("Extracted %d features (fingerprint %s)", len(features), self.fingerprint)
        self.monitor.log_summary()
        return features


def extract(
    video: VideoSample,
    config: Optional[PipelineConfig] = None,
    base_dir: Optional[Path] = None,
    backbone: Optional[Backbone] = None,
) -> FusedFeature:
    """One-off extraction of a single video."""
    return FrequencyPipeline(config, backbone=backbone).extract(video, base_dir)
