"""Unit tests for the perturbation suite."""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.dataset_manager import DatasetManager
from src.errors import ConfigError
from src.frames import load_frame, save_frame
from src.models import DatasetManifest, PerturbationSpec, VideoSample
from src.perturbations import (
    ANNEX_K_LUMINANCE,
    contrast,
    derive_frame_seed,
    gaussian_blur,
    gaussian_kernel,
    gaussian_noise,
    jpeg_like,
    perturb,
    perturb_manifest,
    quality_table,
)


class TestGaussianBlur:
    """Test cases for gaussian_blur."""

    def test_kernel_is_normalized_and_symmetric(self):
        """Test that the Gaussian kernel sums to one and is symmetric."""
        kernel = gaussian_kernel(1.5, 4)
        assert kernel.shape == (9,)
        assert kernel.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(kernel, kernel[::-1], atol=1e-15)
        assert np.argmax(kernel) == 4

    def test_impulse_response(self):
        """Test that blurring an impulse gives the separable kernel."""
        frame = np.zeros((11, 11))
        frame[5, 5] = 1.0
        blurred = gaussian_blur(frame, 1.0, 3)
        kernel = gaussian_kernel(1.0, 3)
        np.testing.assert_allclose(blurred[2:9, 2:9], np.outer(kernel, kernel), atol=1e-12)
        np.testing.assert_allclose(blurred, blurred.T, atol=1e-15)
        assert blurred.sum() == pytest.approx(1.0, abs=1e-12)

    def test_constant_frame_unchanged(self):
        """Test that blurring a constant frame leaves it unchanged."""
        np.testing.assert_allclose(gaussian_blur(np.full((8, 8), 0.3), 2.0, 6), 0.3, atol=1e-12)

    def test_default_radius_from_sigma(self):
        """Test the kernel radius derived from sigma."""
        assert PerturbationSpec(kind="gaussian-blur", sigma=1.2).kernel_radius == 4
        assert PerturbationSpec(kind="gaussian-blur", sigma=0.1).kernel_radius == 1
        assert PerturbationSpec(kind="gaussian-blur", sigma=1.0, radius=2).kernel_radius == 2


class TestGaussianNoise:
    """Test cases for gaussian_noise."""

    def test_zero_sigma_is_identity(self):
        """Test that zero noise leaves the frame unchanged."""
        frame = np.random.default_rng(0).random((8, 8))
        assert np.array_equal(gaussian_noise(frame, 0.0, seed=3), frame)

    def test_seeded_and_clipped(self):
        """Test that noise is seeded and clipped to [0, 1]."""
        frame = np.full((16, 16), 0.5)
        first = gaussian_noise(frame, 0.5, seed=1)
        assert np.array_equal(first, gaussian_noise(frame, 0.5, seed=1))
        assert not np.array_equal(first, gaussian_noise(frame, 0.5, seed=2))
        assert first.min() >= 0.0 and first.max() <= 1.0

    def test_frame_seeds_are_stable_and_distinct(self):
        """Test that per-frame seeds are stable and distinct."""
        assert derive_frame_seed(0, "v1", 3) == derive_frame_seed(0, "v1", 3)
        seeds = {derive_frame_seed(0, "v1", i) for i in range(20)}
        seeds.add(derive_frame_seed(1, "v1", 0))
        seeds.add(derive_frame_seed(0, "v2", 0))
        assert len(seeds) == 22
        assert all(0 <= s < 2**63 for s in seeds)


class TestJpegLike:
    """Test cases for the JPEG-like quantization round trip."""

    @pytest.fixture
    def frame(self):
        return np.random.default_rng(4).random((32, 32))

    def test_quality_fifty_is_the_standard_table(self):
        """Test that quality 50 uses the standard luminance table."""
        assert np.array_equal(quality_table(50), ANNEX_K_LUMINANCE)

    def test_quality_hundred_is_all_ones(self):
        """Test that quality 100 quantizes with step one."""
        assert np.all(quality_table(100) == 1.0)

    def test_table_coarsens_with_lower_quality(self):
        """Test that lower quality gives coarser steps."""
        assert np.all(quality_table(10) >= quality_table(30))
        assert np.all(quality_table(30) >= quality_table(90))

    def test_error_decreases_with_quality(self, frame):
        """Test that reconstruction error falls as quality rises."""
        errors = [np.mean((jpeg_like(frame, q) - frame) ** 2) for q in (10, 30, 50, 70, 90, 100)]
        assert errors == sorted(errors, reverse=True)

    def test_quality_hundred_is_near_lossless(self, frame):
        """Test that quality 100 is close to lossless."""
        assert np.max(np.abs(jpeg_like(frame, 100) - frame)) <= 4.0 / 255.0

    def test_non_multiple_of_eight_keeps_shape(self):
        """Test that frames not divisible by eight keep their shape."""
        frame = np.random.default_rng(5).random((10, 13, 3))
        result = jpeg_like(frame, 50)
        assert result.shape == (10, 13, 3)
        assert result.min() >= 0.0 and result.max() <= 1.0

    def test_quality_bounds(self):
        """Test that quality outside [1, 100] is a config error."""
        with pytest.raises(ConfigError):
            PerturbationSpec(kind="jpeg-like", quality=0)
        with pytest.raises(ConfigError):
            PerturbationSpec(kind="jpeg-like", quality=101)


class TestContrastAndDispatch:
    """Test cases for contrast and perturb."""

    def test_contrast(self):
        """Test the contrast gain around mid-gray."""
        frame = np.array([[0.25, 0.5, 0.75]])
        np.testing.assert_allclose(contrast(frame, 2.0), [[0.0, 0.5, 1.0]], atol=1e-12)
        np.testing.assert_allclose(contrast(frame, 0.5), [[0.375, 0.5, 0.625]], atol=1e-12)
        np.testing.assert_allclose(contrast(frame, 1.0), frame, atol=1e-12)

    @pytest.mark.parametrize(
        "spec",
        [
            PerturbationSpec(kind="gaussian-blur", sigma=1.0),
            PerturbationSpec(kind="gaussian-noise", sigma=0.05),
            PerturbationSpec(kind="jpeg-like", quality=30),
            PerturbationSpec(kind="contrast", gain=1.5),
        ],
    )
    def test_perturb_keeps_shape_and_range(self, spec):
        """Test that every perturbation keeps shape and range."""
        frame = np.random.default_rng(6).random((16, 16))
        result = perturb(frame, spec)
        assert result.shape == frame.shape
        assert result.min() >= 0.0 and result.max() <= 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "gaussian-blur", "sigma": 0.0},
            {"kind": "gaussian-noise", "sigma": -0.1},
            {"kind": "contrast", "gain": 0.0},
            {"kind": "sharpen"},
        ],
    )
    def test_invalid_specs(self, kwargs):
        """Test that incomplete perturbation specs are config errors."""
        with pytest.raises(ConfigError):
            PerturbationSpec(**kwargs)

    def test_spec_dict_round_trip(self):
        """Test converting a spec to a dictionary and back."""
        spec = PerturbationSpec(kind="gaussian-noise", sigma=0.1, seed=9)
        assert PerturbationSpec.from_dict(spec.to_dict()) == spec


class TestPerturbManifest:
    """Test cases for perturbing a whole manifest."""

    @pytest.fixture
    def corpus(self):
        temp_dir = Path(tempfile.mkdtemp())
        rng = np.random.default_rng(7)
        videos = []
        for index, label in enumerate(("real", "fake", "real")):
            frames = []
            for t in range(2):
                relative = f"src/v{index}/{t}.png"
                save_frame(temp_dir / relative, rng.random((8, 8)))
                frames.append(relative)
            videos.append(VideoSample(id=f"v{index}", label=label, frames=frames))
        yield temp_dir, DatasetManifest(videos=videos, provenance="unit")
        shutil.rmtree(temp_dir)

    def test_paths_labels_and_provenance(self, corpus):
        """Test the paths, labels and provenance of a perturbed manifest."""
        base, manifest = corpus
        spec = PerturbationSpec(kind="contrast", gain=0.5)
        result = perturb_manifest(manifest, spec, base / "out", base_dir=base)
        assert [v.id for v in result] == ["v0", "v1", "v2"]
        assert [v.label for v in result] == ["real", "fake", "real"]
        assert result.videos[1].frames == ["v1/frame_0000.png", "v1/frame_0001.png"]
        assert result.provenance.startswith("unit; perturbed")
        original = load_frame(base / manifest.videos[0].frames[0])
        perturbed = load_frame(base / "out" / result.videos[0].frames[0])
        np.testing.assert_allclose(perturbed, contrast(original, 0.5), atol=0.5 / 255.0 + 1e-12)

    def test_noise_independent_of_workers(self, corpus):
        """Test that noise frames do not depend on the worker count."""
        base, manifest = corpus
        spec = PerturbationSpec(kind="gaussian-noise", sigma=0.1, seed=3)
        perturb_manifest(manifest, spec, base / "serial", base_dir=base, workers=1)
        perturb_manifest(manifest, spec, base / "parallel", base_dir=base, workers=3)
        for video in manifest:
            for t in range(2):
                name = f"{video.id}/frame_{t:04d}.png"
                assert (base / "serial" / name).read_bytes() == (base / "parallel" / name).read_bytes()

    def test_result_saves_next_to_frames(self, corpus):
        """Test that the perturbed manifest saves next to its frames."""
        base, manifest = corpus
        result = perturb_manifest(manifest, PerturbationSpec(kind="jpeg-like", quality=50), base / "jpeg", base)
        manager = DatasetManager(base / "jpeg" / "manifest.jsonl")
        manager.save(result)
        assert manager.validate_data_integrity(manager.load())["is_valid"]
