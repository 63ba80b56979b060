"""
End-to-end acceptance run on the synthetic corpus.

One corpus of 100 videos per class (16 frames of 64x64, fakes upsampled x2
with nearest neighbour) is rendered per module. Every test trains the linear
head on the same stratified 70/30 split; the cross-dataset tests score that
head on freshly rendered corpora.
"""

import numpy as np
import pytest

from src.cli import ablation_grid, evaluate, run_ablation
from src.classifier import TrainConfig, train
from src.dataset_manager import DatasetManager, split_manifest
from src.dct_engine import dct2_batch
from src.frames import load_video_frames
from src.fusion_pipeline import FrequencyPipeline
from src.models import SQRT2, PerturbationSpec, PipelineConfig
from src.perturbations import perturb_manifest
from src.spectral_weighting import band_energies, build_weight_matrix
from src.synthetic import SynthConfig, synth_corpus

TRAIN_CONFIG = TrainConfig(lr=0.01, epochs=60, batch_size=32, seed=0)
SPLIT_SEED = 0


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    synth_corpus(root, SynthConfig(count_per_class=100, size=64, factor=2, mode="nearest", frames=16, seed=0))
    return root


@pytest.fixture(scope="module")
def manifest(corpus):
    return DatasetManager(corpus / "manifest.jsonl").load()


@pytest.fixture(scope="module")
def split(manifest):
    return split_manifest(manifest, test_fraction=0.3, seed=SPLIT_SEED)


@pytest.fixture(scope="module")
def pipeline():
    return FrequencyPipeline(PipelineConfig())


@pytest.fixture(scope="module")
def trained(split, corpus, pipeline):
    train_part, test_part = split
    train_features = pipeline.extract_batch(train_part.videos, base_dir=corpus, workers=4)
    test_features = pipeline.extract_batch(test_part.videos, base_dir=corpus, workers=4)
    return train(train_features, TRAIN_CONFIG), test_features


class TestDiscrimination:
    """Test the default pipeline separates the two classes."""

    def test_split_sizes(self, split):
        """Test the stratified 70/30 split sizes."""
        train_part, test_part = split
        assert train_part.count_by_label() == {"real": 70, "fake": 70}
        assert test_part.count_by_label() == {"real": 30, "fake": 30}

    def test_test_auc(self, trained):
        """Test that the default pipeline reaches AUC 0.95 on the test split."""
        head, test_features = trained
        report = evaluate(head, test_features)
        assert report["count"] == 60
        assert report["auc"] >= 0.95

    def test_fakes_carry_more_high_band_energy(self, manifest, corpus):
        """Test that upsampled fakes hold more unweighted high-band energy than reals."""
        weights = build_weight_matrix(64, 64, 1.0)
        high = {"real": [], "fake": []}
        for video in manifest.videos:
            frames = load_video_frames(video, 16, 64, corpus)
            high[video.label].append(band_energies(dct2_batch(frames), weights)[2])
        assert len(high["real"]) == len(high["fake"]) == 100
        assert np.mean(high["fake"]) > 2.0 * np.mean(high["real"])


@pytest.fixture(scope="module")
def ablation_results(manifest, corpus):
    """AUC per (beta, reduction) on the shared split."""
    configs = ablation_grid(PipelineConfig(), [SQRT2, 1.0], ["max", "avg", "min"], ["fta"], [16], ["4x4"])
    rows = run_ablation(manifest, corpus, configs, TRAIN_CONFIG, test_fraction=0.3, seed=SPLIT_SEED, workers=4)
    return {(row["beta"], row["reduction"]): row["auc"] for row in rows}


class TestAblationDirections:
    """Test the weighting and reduction choices never materially hurt."""

    def test_every_setting_reported(self, ablation_results):
        """Test that every grid setting yields an AUC."""
        assert len(ablation_results) == 6
        assert all(0.0 <= value <= 1.0 for value in ablation_results.values())

    def test_weighting(self, ablation_results):
        """Test that band weighting does not lose to the unweighted spectrum."""
        assert ablation_results[(SQRT2, "max")] >= ablation_results[(1.0, "max")] - 0.02

    @pytest.mark.parametrize("other", ["avg", "min"])
    def test_max_reduction(self, ablation_results, other):
        """Test that the max reduction does not lose to avg or min."""
        assert ablation_results[(SQRT2, "max")] >= ablation_results[(SQRT2, other)] - 0.02


class TestRobustness:
    """Test the trained head still ranks degraded test videos."""

    def test_jpeg_quality_50(self, split, corpus, pipeline, trained, tmp_path):
        """Test the test split AUC after JPEG-like compression at quality 50."""
        head, _ = trained
        _, test_part = split
        spec = PerturbationSpec(kind="jpeg-like", quality=50)
        degraded = perturb_manifest(test_part, spec, tmp_path, base_dir=corpus, workers=4)
        assert "perturbed" in degraded.provenance
        features = pipeline.extract_batch(degraded.videos, base_dir=tmp_path, workers=4)
        assert evaluate(head, features)["auc"] >= 0.75


class TestCrossDataset:
    """Test a head trained on the nearest-upsampled corpus against other corpora."""

    def render(self, root, pipeline, **settings):
        config = SynthConfig(count_per_class=30, size=64, frames=16, **settings)
        manifest = synth_corpus(root, config)
        return pipeline.extract_batch(manifest.videos, base_dir=root, workers=4)

    def test_unseen_videos_of_the_same_generator(self, pipeline, trained, tmp_path):
        """Test that a fresh nearest-upsampled corpus is ranked as well as the test split."""
        head, _ = trained
        features = self.render(tmp_path, pipeline, factor=2, mode="nearest", seed=1)
        report = evaluate(head, features)
        assert report["count"] == 60
        assert report["auc"] >= 0.95

    @pytest.mark.parametrize("factor,mode", [(2, "bilinear"), (4, "nearest")])
    def test_other_generators(self, pipeline, trained, tmp_path, factor, mode):
        """Test that a bilinear or x4 corpus is scored under the same fingerprint."""
        head, _ = trained
        features = self.render(tmp_path, pipeline, factor=factor, mode=mode, seed=2)
        assert {feature.fingerprint for feature in features} == {head.fingerprint}
        report = evaluate(head, features)
        assert report["count"] == 60
        assert 0.0 <= report["auc"] <= 1.0
