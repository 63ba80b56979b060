"""
Command-line entry point.

Subcommands: synth, perturb, split, extract, train, eval, inspect, ablate.
Flags are parsed into validated dataclasses before any file is touched.
Machine-readable results go to stdout as JSON; logs go to stderr. Every
FreqClueError maps to its own exit code.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

try:
    from atomic_io import atomic_write_json, atomic_write_text
    from backbone import Backbone
    from classifier import TrainConfig, load_head, save_head, score, train
    from dataset_manager import DatasetManager, rebase_manifest, split_manifest
    from errors import ConfigError, FingerprintMismatchError, FreqClueError, IngestionError
    from feature_store import (
        binary_path_for,
        common_fingerprint,
        read_features,
        write_binary,
        write_features,
    )
    from fusion_pipeline import FrequencyPipeline
    from log_config import setup_logging
    from metrics import accuracy, auc, roc_curve
    from models import (
        ATTENTION_MODES,
        REDUCTIONS,
        SQRT2,
        PERTURBATION_KINDS,
        BackboneSpec,
        BlockGrid,
        PerturbationSpec,
        PipelineConfig,
        compute_fingerprint,
    )
    from performance_manager import PerformanceMonitor
    from perturbations import perturb_manifest
    from spectral_weighting import band_energies, band_map_text, build_weight_matrix
    from synthetic import UPSAMPLE_FACTORS, UPSAMPLE_MODES, SynthConfig, synth_corpus
except ImportError:
    from .atomic_io import atomic_write_json, atomic_write_text
    from .backbone import Backbone
    from .classifier import TrainConfig, load_head, save_head, score, train
    from .dataset_manager import DatasetManager, rebase_manifest, split_manifest
    from .errors import ConfigError, FingerprintMismatchError, FreqClueError, IngestionError
    from .feature_store import (
        binary_path_for,
        common_fingerprint,
        read_features,
        write_binary,
        write_features,
    )
    from .fusion_pipeline import FrequencyPipeline
    from .log_config import setup_logging
    from .metrics import accuracy, auc, roc_curve
    from .models import (
        ATTENTION_MODES,
        REDUCTIONS,
        SQRT2,
        PERTURBATION_KINDS,
        BackboneSpec,
        BlockGrid,
        PerturbationSpec,
        PipelineConfig,
        compute_fingerprint,
    )
    from .performance_manager import PerformanceMonitor
    from .perturbations import perturb_manifest
    from .spectral_weighting import band_energies, band_map_text, build_weight_matrix
    from .synthetic import UPSAMPLE_FACTORS, UPSAMPLE_MODES, SynthConfig, synth_corpus

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """
    Effective settings of one CLI invocation.

    Attributes:
        command: Subcommand name
        manifest: Input manifest, when the subcommand reads one
        out: Output file or directory
        seed: Seed for every stochastic step
        workers: Per-video worker threads
        pipeline: Feature pipeline settings, for subcommands that run the pipeline
        extra: Subcommand-specific settings that enter the fingerprint
    """

    command: str
    manifest: Optional[Path] = None
    out: Optional[Path] = None
    seed: int = 0
    workers: int = 1
    pipeline: Optional[PipelineConfig] = None
    extra: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {self.workers}")

    def settings(self) -> dict:
        """Settings that determine the produced numbers; paths and workers excluded."""
        settings = {"command": self.command, "seed": self.seed, **self.extra}
        if self.pipeline is not None:
            settings["pipeline"] = self.pipeline.to_dict()
        return settings

    def fingerprint(self) -> str:
        return compute_fingerprint(self.settings())


def parse_beta(text: str) -> float:
    if str(text).strip().lower() in ("sqrt2", "√2"):
        return SQRT2
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid beta {text!r}") from None


def _csv(text: str) -> List[str]:
    return [item.strip() for item in str(text).split(",") if item.strip()]


def pipeline_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        frames=args.frames,
        grid=BlockGrid.parse(args.blocks),
        beta=args.beta,
        reduction=args.reduction,
        attention=args.attention,
        backbone=BackboneSpec.parse(args.backbone),
        epsilon=args.epsilon,
        target_size=args.size,
    )


def train_config_from_args(args) -> TrainConfig:
    return TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    sys.stdout.flush()


def _load_manifest(path, lenient: bool = False, check_frames: bool = True):
    """
    Load a manifest and, unless check_frames is off, make sure every frame file exists.

    Raises:
        IngestionError: Naming the videos whose frames are missing
    """
    manager = DatasetManager(path)
    manifest = manager.load(lenient=lenient)
    if check_frames:
        report = manager.validate_data_integrity(manifest)
        if not report["is_valid"]:
            missing = report["missing_frames"]
            shown = ", ".join(f"{video_id}: {frame}" for video_id, frame in missing[:5])
            more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
            raise IngestionError(
                f"{len(missing)} frame files listed in {manager.manifest_path} are missing ({shown}{more})"
            )
    return manifest, manager.base_dir


def _reads_frames(config: PipelineConfig) -> bool:
    return config.backbone.kind != "tensor-file"


def cmd_synth(args) -> int:
    config = SynthConfig(
        count_per_class=args.count,
        size=args.size,
        factor=args.factor,
        mode=args.mode,
        frames=args.frames,
        seed=args.seed,
    )
    run = RunConfig(
        command="synth",
        out=Path(args.out),
        seed=args.seed,
        workers=args.workers,
        extra={"synth": config.to_dict()},
    )
    manifest = synth_corpus(run.out, config, fingerprint=run.fingerprint())
    _emit(
        {
            "manifest": str(run.out / "manifest.jsonl"),
            "videos": len(manifest),
            "labels": manifest.count_by_label(),
            "fingerprint": run.fingerprint(),
        }
    )
    return 0


def cmd_perturb(args) -> int:
    spec = PerturbationSpec(
        kind=args.kind,
        sigma=args.sigma,
        radius=args.radius,
        quality=args.quality,
        gain=args.gain,
        seed=args.seed,
    )
    run = RunConfig(
        command="perturb",
        manifest=Path(args.manifest),
        out=Path(args.out),
        seed=args.seed,
        workers=args.workers,
        extra={"perturbation": spec.to_dict()},
    )
    manifest, base_dir = _load_manifest(run.manifest, args.lenient)
    perturbed = perturb_manifest(manifest, spec, run.out, base_dir, workers=run.workers)
    perturbed.provenance = f"{perturbed.provenance}; fingerprint {run.fingerprint()}"
    perturbed.fingerprint = run.fingerprint()
    target = DatasetManager(run.out / "manifest.jsonl").save(perturbed)
    _emit(
        {
            "manifest": str(target),
            "videos": len(perturbed),
            "perturbation": spec.to_dict(),
            "fingerprint": run.fingerprint(),
        }
    )
    return 0


def cmd_split(args) -> int:
    run = RunConfig(
        command="split",
        manifest=Path(args.manifest),
        out=Path(args.out),
        seed=args.seed,
        workers=args.workers,
        extra={"test_fraction": args.test_fraction},
    )
    manifest, base_dir = _load_manifest(run.manifest, args.lenient, check_frames=False)
    train_part, test_part = split_manifest(manifest, args.test_fraction, run.seed)
    report = {"seed": run.seed, "test_fraction": args.test_fraction, "fingerprint": run.fingerprint()}
    for part in (train_part, test_part):
        rebased = rebase_manifest(part, base_dir, run.out)
        rebased.fingerprint = run.fingerprint()
        target = DatasetManager(run.out / f"{part.split}.jsonl").save(rebased)
        report[part.split] = {"manifest": str(target), "labels": part.count_by_label()}
    _emit(report)
    return 0


def cmd_extract(args) -> int:
    run = RunConfig(
        command="extract",
        manifest=Path(args.manifest),
        out=Path(args.out),
        seed=args.seed,
        workers=args.workers,
        pipeline=pipeline_from_args(args),
    )
    manifest, base_dir = _load_manifest(run.manifest, args.lenient, _reads_frames(run.pipeline))
    pipeline = FrequencyPipeline(run.pipeline)
    features = pipeline.extract_batch(manifest.videos, base_dir, workers=run.workers)
    write_features(run.out, features)
    write_binary(binary_path_for(run.out), features)
    _emit(
        {
            "features": str(run.out),
            "count": len(features),
            "fingerprint": pipeline.fingerprint,
            "frames": run.pipeline.frames,
            "blocks": run.pipeline.grid.k,
        }
    )
    return 0


def cmd_train(args) -> int:
    config = train_config_from_args(args)
    run = RunConfig(
        command="train",
        out=Path(args.out),
        seed=config.seed,
        workers=args.workers,
        extra={"train": config.to_dict()},
    )
    features = read_features(args.features)
    validation = read_features(args.validation) if args.validation else None
    head = train(features, config, validation=validation)
    run.extra["features"] = head.fingerprint
    head.config_fingerprint = run.fingerprint()
    save_head(run.out, head)
    final = head.history[-1] if head.history else {}
    _emit(
        {
            "head": str(run.out),
            "fingerprint": head.fingerprint,
            "config_fingerprint": head.config_fingerprint,
            "samples": len(features),
            "train": config.to_dict(),
            "final": final,
        }
    )
    return 0


def evaluate(head, features, threshold: float = 0.5, with_roc: bool = False) -> dict:
    """Scores features with a head and reports AUC and accuracy."""
    pairs = [(score(head, feature), feature.label) for feature in features]
    report = {
        "auc": auc(pairs),
        "accuracy": accuracy(pairs, threshold),
        "count": len(pairs),
        "threshold": threshold,
    }
    if with_roc:
        report["roc"] = [[point.fpr, point.tpr] for point in roc_curve(pairs)]
    return report


def cmd_eval(args) -> int:
    run = RunConfig(command="eval", seed=args.seed, workers=args.workers, extra={"threshold": args.threshold})
    head = load_head(args.head)
    features = read_features(args.features)
    try:
        fingerprint = common_fingerprint(features, str(args.features))
        if head.fingerprint and fingerprint != head.fingerprint:
            raise FingerprintMismatchError(
                f"{args.features} has fingerprint {fingerprint} but head {args.head} was trained on {head.fingerprint}"
            )
    except FingerprintMismatchError as e:
        if not args.force:
            raise
        logger.warning("Continuing despite fingerprint mismatch (--force): %s", e)
        fingerprint = head.fingerprint
    report = evaluate(head, features, args.threshold, args.roc)
    report["fingerprint"] = fingerprint
    run.extra.update(head=head.config_fingerprint, features=fingerprint)
    report["config_fingerprint"] = run.fingerprint()
    if args.out:
        atomic_write_json(args.out, report)
    _emit(report)
    return 0


def cmd_inspect(args) -> int:
    run = RunConfig(
        command="inspect",
        manifest=Path(args.manifest),
        out=Path(args.out),
        seed=args.seed,
        pipeline=pipeline_from_args(args),
    )
    manifest, base_dir = _load_manifest(run.manifest, args.lenient, _reads_frames(run.pipeline))
    videos = manifest.videos
    if args.video:
        missing = sorted({video_id for video_id in args.video if manifest.get(video_id) is None})
        if missing:
            raise ConfigError(f"Videos not in manifest {run.manifest}: {missing}")
        videos = [manifest.get(video_id) for video_id in dict.fromkeys(args.video)]
    pipeline = FrequencyPipeline(run.pipeline)
    per_video: Dict[str, dict] = {}
    by_label: Dict[str, List[List[float]]] = {}
    band_text = None
    band_weights = None
    for video in videos:
        result = pipeline.analyze(video, base_dir)
        weights = build_weight_matrix(*result.raw_spectrum.shape[-2:], run.pipeline.beta)
        if band_text is None:
            band_text = band_map_text(weights)
            band_weights = list(weights.levels())
        energies = band_energies(result.raw_spectrum, weights)
        atomic_write_text(run.out / "attention" / f"{video.id}.csv", result.attention.to_csv())
        per_video[video.id] = {"label": video.label, "band_energy": {str(k): v for k, v in energies.items()}}
        by_label.setdefault(video.label, []).append([energies[0], energies[1], energies[2]])
    if band_text is not None:
        atomic_write_text(run.out / "bands.txt", band_text + "\n")
    summary = {
        label: {str(band): float(np.mean([row[band] for row in rows])) for band in (0, 1, 2)}
        for label, rows in sorted(by_label.items())
    }
    report = {
        "fingerprint": pipeline.fingerprint,
        "band_weights": band_weights,
        "videos": per_video,
        "mean_band_energy": summary,
    }
    atomic_write_json(run.out / "band_energies.json", report)
    _emit({"fingerprint": pipeline.fingerprint, "videos": len(per_video), "mean_band_energy": summary})
    return 0


def ablation_grid(
    base: PipelineConfig,
    betas: Sequence[float],
    reductions: Sequence[str],
    attentions: Sequence[str],
    frames: Sequence[int],
    blocks: Sequence[str],
) -> List[PipelineConfig]:
    """Every combination of the listed settings, on top of the base backbone, epsilon and size."""
    configs = []
    for n in frames:
        for grid in blocks:
            for beta in betas:
                for reduction in reductions:
                    for mode in attentions:
                        configs.append(
                            PipelineConfig(
                                frames=n,
                                grid=BlockGrid.parse(grid),
                                beta=beta,
                                reduction=reduction,
                                attention=mode,
                                backbone=base.backbone,
                                epsilon=base.epsilon,
                                target_size=base.target_size,
                            )
                        )
    return configs


def run_ablation(
    manifest,
    base_dir,
    configs: Sequence[PipelineConfig],
    train_config: TrainConfig,
    test_fraction: float = 0.3,
    seed: int = 0,
    workers: int = 1,
) -> List[dict]:
    """
    Extract, train and evaluate every configuration on one stratified split.

    Frames are loaded and featurized once per video and frame count, then
    shared by every configuration with that frame count.
    """
    train_part, test_part = split_manifest(manifest, test_fraction, seed)
    test_ids = {video.id for video in test_part.videos}
    backbone = Backbone(configs[0].backbone) if configs else None
    monitor = PerformanceMonitor()
    pipelines = [FrequencyPipeline(config, backbone=backbone, monitor=monitor) for config in configs]

    def features_for(video):
        out = []
        maps_by_frames = {}
        for pipeline in pipelines:
            n = pipeline.config.frames
            if n not in maps_by_frames:
                maps_by_frames[n] = pipeline.featurize_video(video, base_dir)
            result = pipeline.run_maps(maps_by_frames[n])
            out.append(pipeline.to_feature(video.id, video.label, result))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_video = list(pool.map(features_for, manifest.videos))
    else:
        per_video = [features_for(video) for video in manifest.videos]

    rows = []
    for index, pipeline in enumerate(pipelines):
        features = [video_features[index] for video_features in per_video]
        train_features = [f for f in features if f.video_id not in test_ids]
        test_features = [f for f in features if f.video_id in test_ids]
        head = train(train_features, train_config)
        metrics = evaluate(head, test_features)
        config = pipeline.config
        rows.append(
            {
                "frames": config.frames,
                "blocks": str(config.grid),
                "beta": config.beta,
                "reduction": config.reduction,
                "attention": config.attention,
                "fingerprint": pipeline.fingerprint,
                "auc": metrics["auc"],
                "accuracy": metrics["accuracy"],
            }
        )
        logger.info("Ablation %s: auc %.4f", pipeline.fingerprint, metrics["auc"])
    monitor.log_summary()
    return rows


def _parse_list(text: str, convert, name: str) -> list:
    try:
        return [convert(item) for item in _csv(text)]
    except (ValueError, argparse.ArgumentTypeError) as e:
        raise ConfigError(f"Invalid --{name} list {text!r}: {e}") from None


def cmd_ablate(args) -> int:
    base = pipeline_from_args(args)
    train_config = train_config_from_args(args)
    configs = ablation_grid(
        base,
        betas=_parse_list(args.betas, parse_beta, "betas"),
        reductions=_parse_list(args.reductions, str, "reductions"),
        attentions=_parse_list(args.attentions, str, "attentions"),
        frames=_parse_list(args.frames_grid, int, "frames-grid") if args.frames_grid else [base.frames],
        blocks=_csv(args.blocks_grid) if args.blocks_grid else [str(base.grid)],
    )
    if not configs:
        raise ConfigError("Ablation grid is empty")
    run = RunConfig(
        command="ablate",
        manifest=Path(args.manifest),
        out=Path(args.out),
        seed=args.seed,
        workers=args.workers,
        pipeline=base,
        extra={"grid": [config.fingerprint() for config in configs], "train": train_config.to_dict()},
    )
    manifest, base_dir = _load_manifest(run.manifest, args.lenient, _reads_frames(base))
    rows = run_ablation(manifest, base_dir, configs, train_config, args.test_fraction, run.seed, run.workers)
    report = {
        "fingerprint": run.fingerprint(),
        "seed": run.seed,
        "test_fraction": args.test_fraction,
        "train": train_config.to_dict(),
        "results": rows,
    }
    atomic_write_json(run.out, report)
    _emit(report)
    return 0


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=0, help="seed for every stochastic step")
    parent.add_argument("--workers", type=int, default=1, help="worker threads over videos")
    return parent


def _manifest_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--manifest", required=True, help="input manifest (.jsonl)")
    parent.add_argument("--lenient", action="store_true", help="skip malformed manifest lines with a warning")
    return parent


def _pipeline_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--frames", type=int, default=16, help="frames N sampled per video")
    parent.add_argument("--blocks", default="4x4", help="block grid RxC")
    parent.add_argument("--beta", type=parse_beta, default=SQRT2, help="weight matrix base (sqrt2 or a number)")
    parent.add_argument("--reduction", choices=REDUCTIONS, default="max")
    parent.add_argument("--attention", choices=ATTENTION_MODES, default="fta")
    parent.add_argument(
        "--backbone", default="identity", help="identity, randconv:<options> or file:<path>"
    )
    parent.add_argument("--epsilon", type=float, default=1e-12)
    parent.add_argument("--size", type=int, default=64, help="side length frames are resized to")
    return parent


def _training_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--lr", type=float, default=1e-4, help="starting learning rate")
    parent.add_argument("--epochs", type=int, default=100)
    parent.add_argument("--batch-size", type=int, default=32)
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    manifest = _manifest_parent()
    pipeline = _pipeline_parent()
    training = _training_parent()
    parser = argparse.ArgumentParser(
        prog="freqclue", description="DCT spectral-temporal features for video forgery detection"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="render a synthetic real/fake corpus")
    p.add_argument("--out", required=True, help="corpus directory")
    p.add_argument("--count", type=int, default=100, help="videos per class")
    p.add_argument("--size", type=int, default=64, help="frame side length")
    p.add_argument("--factor", type=int, choices=UPSAMPLE_FACTORS, default=2)
    p.add_argument("--mode", choices=UPSAMPLE_MODES, default="nearest")
    p.add_argument("--frames", type=int, default=16, help="frames per video")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("perturb", parents=[common, manifest], help="write a perturbed copy of a manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--kind", required=True, choices=PERTURBATION_KINDS)
    p.add_argument("--sigma", type=float)
    p.add_argument("--radius", type=int)
    p.add_argument("--quality", type=int)
    p.add_argument("--gain", type=float)
    p.set_defaults(handler=cmd_perturb)

    p = sub.add_parser("split", parents=[common, manifest], help="stratified train/test split of a manifest")
    p.add_argument("--out", required=True, help="directory for train.jsonl and test.jsonl")
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("extract", parents=[common, manifest, pipeline], help="extract fused features")
    p.add_argument("--out", required=True, help="feature file (.jsonl); the .fcf binary goes next to it")
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("train", parents=[common, training], help="train the linear head")
    p.add_argument("--features", required=True)
    p.add_argument("--validation", help="features watched by the learning-rate plateau rule")
    p.add_argument("--out", required=True, help="head file (.json)")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score features and report AUC and accuracy")
    p.add_argument("--features", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--out", help="report file (.json)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--roc", action="store_true", help="include ROC points in the report")
    p.add_argument("--force", action="store_true", help="evaluate despite a fingerprint mismatch")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("inspect", parents=[common, manifest, pipeline], help="dump band map, attention and band energies")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--video", action="append", help="restrict to this video id (repeatable)")
    p.set_defaults(handler=cmd_inspect)

    p = sub.add_parser("ablate", parents=[common, manifest, pipeline, training], help="run the ablation grid")
    p.add_argument("--out", required=True, help="report file (.json)")
    p.add_argument("--betas", default="sqrt2,1")
    p.add_argument("--reductions", default="max,avg,min")
    p.add_argument("--attentions", default="fta,uniform")
    p.add_argument("--frames-grid", help="comma-separated frame counts; defaults to --frames")
    p.add_argument("--blocks-grid", help="comma-separated RxC grids; defaults to --blocks")
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FreqClueError as e:
        sys.stderr.write(f"freqclue {args.command}: {type(e).__name__}: {e}\n")
        return e.exit_code
    except Exception:
        logger.exception("Unexpected failure in %s", args.command)
        return 1
