"""
Feature files written by extraction and read by training and evaluation.

Two encodings of the same records:
- JSON lines: one FusedFeature per line (id, label, fingerprint, metadata, values)
- FCF1 binary: magic b"FCF1", little-endian u32 C, then the float64 values of
  every record in order (count = payload bytes / (8 * C))
"""

import json
import struct
from pathlib import Path
from typing import List, Sequence

import numpy as np

try:
    from atomic_io import atomic_write_bytes, atomic_write_jsonl
    from errors import (
        DataCorruptionError,
        FileOperationError,
        FingerprintMismatchError,
        FormatError,
        ShapeError,
    )
    from models import FusedFeature
except ImportError:
    from .atomic_io import atomic_write_bytes, atomic_write_jsonl
    from .errors import (
        DataCorruptionError,
        FileOperationError,
        FingerprintMismatchError,
        FormatError,
        ShapeError,
    )
    from .models import FusedFeature

FEATURE_MAGIC = b"FCF1"
FEATURE_HEADER = struct.Struct("<4sI")
BINARY_SUFFIX = ".fcf"


def write_features(path, features: Sequence[FusedFeature]) -> Path:
    """Write features as JSON lines."""
    return atomic_write_jsonl(path, (feature.to_dict() for feature in features))


def read_features(path) -> List[FusedFeature]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, IOError) as e:
        raise FileOperationError(f"Cannot read feature file {path}: {e}") from e
    features = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            features.append(FusedFeature.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataCorruptionError(f"{path}:{number}: malformed feature record: {e}") from e
    return features


def write_binary(path, features: Sequence[FusedFeature]) -> Path:
    """Write the flat FCF1 encoding; all features must share one length."""
    lengths = {feature.channels for feature in features}
    if len(lengths) > 1:
        raise ShapeError(f"Features have mixed lengths {sorted(lengths)}")
    channels = lengths.pop() if lengths else 0
    payload = b"".join(np.asarray(f.values, dtype="<f8").tobytes() for f in features)
    return atomic_write_bytes(path, FEATURE_HEADER.pack(FEATURE_MAGIC, channels) + payload)


def read_binary(path) -> np.ndarray:
    """Read an FCF1 file into a count x C float64 matrix."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except (OSError, IOError) as e:
        raise FileOperationError(f"Cannot read feature file {path}: {e}") from e
    if len(raw) < FEATURE_HEADER.size:
        raise FormatError(f"{path}: file too short for an FCF1 header")
    magic, channels = FEATURE_HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    payload = len(raw) - FEATURE_HEADER.size
    if channels == 0:
        if payload:
            raise FormatError(f"{path}: zero-length features with a non-empty payload")
        return np.zeros((0, 0))
    if payload % (8 * channels) != 0:
        raise FormatError(f"{path}: payload of {payload} bytes is not a whole number of {channels}-vectors")
    values = np.frombuffer(raw, dtype="<f8", offset=FEATURE_HEADER.size)
    return values.reshape(-1, channels).astype(np.float64)


def binary_path_for(jsonl_path) -> Path:
    return Path(jsonl_path).with_suffix(BINARY_SUFFIX)


def common_fingerprint(features: Sequence[FusedFeature], source: str = "features") -> str:
    """The single fingerprint shared by all features, or FingerprintMismatchError."""
    fingerprints = {feature.fingerprint for feature in features}
    if len(fingerprints) > 1:
        raise FingerprintMismatchError(f"{source} mixes fingerprints {sorted(fingerprints)}")
    return fingerprints.pop() if fingerprints else ""


def feature_matrix(features: Sequence[FusedFeature]):
    """Stack features into (X, y) with fake = 1; unlabeled features are rejected."""
    if not features:
        raise ShapeError("No features given")
    unlabeled = [f.video_id for f in features if f.label is None]
    if unlabeled:
        raise DataCorruptionError(f"Features without labels: {unlabeled[:5]}")
    lengths = {f.channels for f in features}
    if len(lengths) > 1:
        raise ShapeError(f"Features have mixed lengths {sorted(lengths)}")
    x = np.stack([f.values for f in features])
    y = np.array([1 if f.label == "fake" else 0 for f in features], dtype=np.int64)
    return x, y
