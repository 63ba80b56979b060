"""Unit tests for backbones and FMT1 tensor files."""

import shutil
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.backbone import (
    TENSOR_HEADER,
    Backbone,
    conv_output_size,
    featurize,
    read_tensor_file,
    write_tensor_file,
)
from src.errors import ConfigError, FormatError, ShapeError
from src.models import BackboneSpec


class TestTensorFiles:
    """Test cases for reading and writing FMT1 files."""

    @pytest.fixture
    def temp_dir(self):
        """Create a temporary directory for testing."""
        temp_dir = tempfile.mkdtemp()
        yield Path(temp_dir)
        shutil.rmtree(temp_dir)

    def test_write_then_read(self, temp_dir):
        """Test that a written tensor file reads back as float32 maps."""
        tensor = np.random.default_rng(0).standard_normal((2, 3, 4, 5)).astype(np.float32)
        path = write_tensor_file(temp_dir / "maps.fmt", tensor)
        assert np.array_equal(read_tensor_file(path), tensor)

    def test_header_layout(self, temp_dir):
        """Test the little-endian magic and dimension header."""
        path = write_tensor_file(temp_dir / "maps.fmt", np.zeros((1, 2, 3, 4)))
        raw = path.read_bytes()
        assert raw[:4] == b"FMT1"
        assert struct.unpack("<4I", raw[4:20]) == (1, 2, 3, 4)
        assert len(raw) == TENSOR_HEADER.size + 24 * 4

    def test_bad_magic(self, temp_dir):
        """Test that a wrong magic is a format error."""
        path = temp_dir / "bad.fmt"
        path.write_bytes(b"XXXX" + struct.pack("<4I", 1, 1, 1, 1) + b"\0\0\0\0")
        with pytest.raises(FormatError, match="magic"):
            read_tensor_file(path)

    def test_big_endian_header(self, temp_dir):
        """Test that a big-endian header is rejected by name."""
        path = temp_dir / "be.fmt"
        path.write_bytes(b"FMT1" + struct.pack(">4I", 1, 1, 2, 2) + bytes(16))
        with pytest.raises(FormatError, match="big-endian"):
            read_tensor_file(path)

    def test_payload_size_mismatch(self, temp_dir):
        """Test that a payload of the wrong size is rejected."""
        path = temp_dir / "short.fmt"
        path.write_bytes(b"FMT1" + struct.pack("<4I", 1, 1, 2, 2) + bytes(12))
        with pytest.raises(FormatError, match="payload"):
            read_tensor_file(path)

    def test_truncated_header(self, temp_dir):
        """Test that a file shorter than the header is rejected."""
        path = temp_dir / "tiny.fmt"
        path.write_bytes(b"FMT1")
        with pytest.raises(FormatError):
            read_tensor_file(path)

    def test_rank_checked_on_write(self, temp_dir):
        """Test that only four-dimensional maps can be written."""
        with pytest.raises(ShapeError):
            write_tensor_file(temp_dir / "flat.fmt", np.zeros((2, 3)))


class TestBackbone:
    """Test cases for the backbone kinds."""

    def test_identity_passes_frames_through(self):
        """Test that the identity backbone returns the frames unchanged."""
        frames = np.random.default_rng(1).random((3, 3, 8, 8))
        assert np.array_equal(Backbone().featurize(frames), frames)
        assert Backbone().id == "identity"

    def test_identity_rank_checked(self):
        """Test that the identity backbone needs an N x c x H x W tensor."""
        with pytest.raises(ShapeError):
            Backbone().featurize(np.zeros((3, 8, 8)))

    @pytest.mark.parametrize("size,stride,expected", [(64, 2, 32), (65, 2, 33), (8, 1, 8), (7, 4, 2)])
    def test_conv_output_size(self, size, stride, expected):
        """Test the output side length of a padded strided convolution."""
        assert conv_output_size(size, stride) == expected

    def test_randconv_shape_and_non_negative(self):
        """Test the random conv stack output shape and ReLU range."""
        spec = BackboneSpec(kind="rand-conv", layers=2, channels=(4, 6), strides=(2, 1))
        frames = np.random.default_rng(2).standard_normal((2, 3, 16, 16))
        backbone = Backbone(spec)
        maps = backbone.featurize(frames)
        assert maps.shape == (2, 6, 8, 8)
        assert maps.shape == backbone.output_shape(frames.shape)
        assert np.all(maps >= 0.0)

    def test_randconv_is_reproducible_from_seed(self):
        """Test that the same seed gives the same random conv weights."""
        spec = BackboneSpec(kind="rand-conv", seed=7)
        frames = np.random.default_rng(3).standard_normal((1, 3, 8, 8))
        assert np.array_equal(featurize(frames, spec), Backbone(spec).featurize(frames))
        other = featurize(frames, BackboneSpec(kind="rand-conv", seed=8))
        assert not np.array_equal(featurize(frames, spec), other)

    def test_randconv_id_round_trips_through_parse(self):
        """Test that a random conv id parses back to the same spec."""
        spec = BackboneSpec(kind="rand-conv", layers=3, channels=(4,), strides=(2, 1, 1), seed=5)
        assert BackboneSpec.parse(Backbone(spec).id) == spec

    def test_tensor_file_directory_picks_by_video_id(self):
        """Test that a tensor directory picks the file named after the video."""
        temp_dir = Path(tempfile.mkdtemp())
        try:
            first = np.ones((2, 1, 4, 4), dtype=np.float32)
            write_tensor_file(temp_dir / "a.fmt", first)
            write_tensor_file(temp_dir / "b.fmt", 2 * first)
            backbone = Backbone(BackboneSpec(kind="tensor-file", path=str(temp_dir)))
            assert np.all(backbone.featurize(video_id="b") == 2.0)
            assert backbone.featurize(video_id="a").dtype == np.float64
            with pytest.raises(ConfigError):
                backbone.featurize()
            with pytest.raises(FormatError):
                backbone.featurize(np.zeros((3, 3, 4, 4)), video_id="a")
        finally:
            shutil.rmtree(temp_dir)

    def test_tensor_file_needs_path(self):
        """Test that a tensor-file backbone without a path is a config error."""
        with pytest.raises(ConfigError):
            BackboneSpec(kind="tensor-file")
