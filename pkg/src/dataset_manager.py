"""
Dataset manager for reading and writing JSON-lines manifests.

A manifest is stored as <name>.jsonl, one video per line, next to a
<name>.meta.json sidecar holding the split tag and provenance note. Frame
paths are kept relative to the manifest directory.
"""

import json
import logging
import os
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

try:
    from atomic_io import atomic_write_json, atomic_write_jsonl
    from errors import ConfigError, DataCorruptionError, FileOperationError
    from models import DatasetManifest, VideoSample, resolve_frame_path
except ImportError:
    from .atomic_io import atomic_write_json, atomic_write_jsonl
    from .errors import ConfigError, DataCorruptionError, FileOperationError
    from .models import DatasetManifest, VideoSample, resolve_frame_path

logger = logging.getLogger(__name__)


class DatasetManager:
    """
    Loads and saves one manifest file.

    Reading is strict by default: a malformed line raises DataCorruptionError.
    With lenient=True malformed lines are skipped with a warning.
    """

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        self.metadata_file = self.manifest_path.with_suffix(".meta.json")

    @property
    def base_dir(self) -> Path:
        """Directory relative frame paths are resolved against."""
        return self.manifest_path.parent

    def load(self, lenient: bool = False) -> DatasetManifest:
        """
        Read the manifest and its sidecar.

        Raises:
            FileOperationError: If the manifest cannot be read
            DataCorruptionError: On a malformed line (strict mode) or duplicate ids
        """
        try:
            with open(self.manifest_path, "r", encoding="utf-8") as f:
                lines = f.readlines()
        except (OSError, IOError) as e:
            raise FileOperationError(f"Cannot read manifest {self.manifest_path}: {e}") from e

        videos: List[VideoSample] = []
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                videos.append(VideoSample.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                message = f"{self.manifest_path}:{number}: malformed manifest entry: {e}"
                if not lenient:
                    raise DataCorruptionError(message) from e
                logger.warning("Skipping %s", message)

        metadata = self._load_metadata()
        return DatasetManifest(
            videos=videos,
            split=metadata.get("split", ""),
            provenance=metadata.get("provenance", ""),
            fingerprint=metadata.get("fingerprint", ""),
        )

    def _load_metadata(self) -> dict:
        if not self.metadata_file.exists():
            return {}
        try:
            with open(self.metadata_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, IOError, json.JSONDecodeError) as e:
            logger.warning("Manifest metadata %s unreadable, using defaults: %s", self.metadata_file, e)
            return {}

    def save(self, manifest: DatasetManifest) -> Path:
        """Write the manifest and its sidecar atomically."""
        atomic_write_jsonl(self.manifest_path, (video.to_dict() for video in manifest.videos))
        atomic_write_json(self.metadata_file, manifest.metadata_dict())
        return self.manifest_path

    def validate_data_integrity(self, manifest: DatasetManifest) -> Dict[str, object]:
        """Check that every frame file exists; returns a status report."""
        missing: List[Tuple[str, str]] = []
        for video in manifest.videos:
            for frame in video.frames:
                if not resolve_frame_path(frame, self.base_dir).exists():
                    missing.append((video.id, frame))
        report = {
            "is_valid": not missing,
            "video_count": len(manifest.videos),
            "labels": manifest.count_by_label(),
            "issues": [],
        }
        if missing:
            report["issues"].append(f"{len(missing)} frame files are missing")
            report["missing_frames"] = missing
        return report


def split_manifest(
    manifest: DatasetManifest, test_fraction: float = 0.3, seed: int = 0
) -> Tuple[DatasetManifest, DatasetManifest]:
    """
    Deterministic stratified train/test split.

    Within each label, videos are ordered by id, shuffled with the seed, and
    the first round(test_fraction * count) go to test. Manifest order is kept
    inside each part.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError(f"Test fraction must be in (0, 1), got {test_fraction}")
    test_ids = set()
    for offset, label in enumerate(("real", "fake")):
        ids = sorted(video.id for video in manifest.videos if video.label == label)
        rng = np.random.default_rng([seed, offset])
        order = rng.permutation(len(ids))
        count = int(round(test_fraction * len(ids)))
        test_ids.update(ids[i] for i in order[:count])

    def tagged(video: VideoSample, split: str) -> VideoSample:
        return VideoSample(id=video.id, label=video.label, frames=video.frames, crop=video.crop, split=split)

    train = [tagged(v, "train") for v in manifest.videos if v.id not in test_ids]
    test = [tagged(v, "test") for v in manifest.videos if v.id in test_ids]
    return (
        DatasetManifest(videos=train, split="train", provenance=manifest.provenance),
        DatasetManifest(videos=test, split="test", provenance=manifest.provenance),
    )


def rebase_manifest(manifest: DatasetManifest, source_dir: Path, target_dir: Path) -> DatasetManifest:
    """Rewrite relative frame paths so they resolve from target_dir instead of source_dir."""
    source_dir, target_dir = Path(source_dir).resolve(), Path(target_dir).resolve()
    if source_dir == target_dir:
        return manifest
    videos = []
    for video in manifest.videos:
        frames = []
        for frame in video.frames:
            path = resolve_frame_path(frame, source_dir).resolve()
            try:
                frames.append(Path(os.path.relpath(path, target_dir)).as_posix())
            except ValueError:
                frames.append(path.as_posix())
        videos.append(
            VideoSample(id=video.id, label=video.label, frames=frames, crop=video.crop, split=video.split)
        )
    return DatasetManifest(videos=videos, split=manifest.split, provenance=manifest.provenance)