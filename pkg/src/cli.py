"""
Command-line entry point: generate, train, evaluate, score, calibrate, sweep, inspect.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src import __version__
from src.data import Dataset, generate_dataset, read_features, read_manifest, write_jsonl, read_jsonl
from src.db import Database
from src.errors import ConfigError, ContractViolation, FakespanError
from src.evaluation import binary_ap, roc_auc
from src.models import PredictionRecord, RunConfig, parse_override
from src.network import ForgeryLocalizer, load_checkpoint
from src.training import GridSpec, Trainer, evaluate_model, grid_sweep
from src.visualization import ChartGenerator
from src.wildscore import ValidSegments, WildScorer, psi_m, read_validity

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
RESOLVED_CONFIG = "resolved_config.json"
METRICS_FILE = "metrics.json"
DEFAULT_THETAS = [0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5]


def resolve_config(args: argparse.Namespace, flags: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Config file, then ``--set`` overrides, then dedicated flags, then ``--seed``; validated as a whole."""
    overrides = dict(parse_override(text) for text in (args.set or []))
    overrides.update({key: value for key, value in (flags or {}).items() if value is not None})
    if getattr(args, "out", None):
        overrides["paths.out_dir"] = args.out
    config = RunConfig.from_file(args.config, overrides)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def prepare_out_dir(config: RunConfig) -> Path:
    out = Path(config.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.dump(str(out / RESOLVED_CONFIG))
    return out


def write_metrics(path: Path, metrics: Dict[str, float]) -> None:
    path.write_text(json.dumps(metrics, indent=2, sort_keys=True))


def require_manifest(config: RunConfig) -> pd.DataFrame:
    manifest = config.paths.manifest
    if manifest is None or not Path(manifest).is_file():
        raise ConfigError(f"manifest not found: {manifest}")
    return read_manifest(manifest)


def cmd_generate(args: argparse.Namespace) -> int:
    config = resolve_config(args, {"synthetic.n_samples": args.n})
    out = prepare_out_dir(config)
    manifest = generate_dataset(config.synthetic, str(out))
    print(f"Wrote {len(manifest)} samples to {out / 'manifest.csv'}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args, {"paths.manifest": args.manifest})
    manifest = require_manifest(config)
    out = prepare_out_dir(config)
    train_set = Dataset.from_manifest(manifest, "train")
    val_set = Dataset.from_manifest(manifest, "val")
    test_set = Dataset.from_manifest(manifest, "test")

    trainer = Trainer(config.model, config.train, config.eval, str(out))
    result = trainer.train(train_set, val_set, resume=args.resume)
    if not result.success:
        raise FakespanError(f"training failed: {result.error}")
    logger.info("Best epoch %d, criterion %.4f", result.best_epoch, result.best_criterion)

    if len(test_set):
        model = load_checkpoint(result.checkpoint_path)
        records, metrics = evaluate_model(model, test_set, config.eval, config.train.batch_size)
        write_jsonl(str(out / "test_predictions.jsonl"), records)
        write_metrics(out / METRICS_FILE, metrics)
    else:
        logger.warning("Manifest has no test split; skipping the final evaluation")

    if args.charts:
        charts = ChartGenerator()
        history = pd.read_csv(out / "history.csv")
        charts.write_html(charts.history_chart(history), str(out / "history.html"))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = resolve_config(args, {"paths.manifest": args.manifest, "paths.checkpoint": args.checkpoint})
    manifest = require_manifest(config)
    out = prepare_out_dir(config)
    dataset = Dataset.from_manifest(manifest, args.split)
    if len(dataset) == 0:
        raise ConfigError(f"split {args.split!r} is empty in {config.paths.manifest}")
    model = load_checkpoint(config.paths.checkpoint)
    records, metrics = evaluate_model(model, dataset, config.eval, config.train.batch_size)
    write_jsonl(str(out / f"{args.split}_predictions.jsonl"), records)
    write_metrics(out / METRICS_FILE, metrics)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    config = resolve_config(args, {
        "paths.checkpoint": args.checkpoint,
        "eval.mode": args.mode,
        "eval.theta": args.theta,
        "validity.chunk_s": args.chunk_seconds,
        "validity.min_segment_s": args.min_segment_seconds,
    })
    if len(args.features) != len(args.validity):
        raise ConfigError(f"{len(args.features)} feature files but {len(args.validity)} validity files")
    out = prepare_out_dir(config)
    model = load_checkpoint(config.paths.checkpoint)
    scorer = WildScorer(model, config.validity, config.eval, chunking=not args.no_chunking)

    results = []
    for feature_path, validity_path in zip(args.features, args.validity):
        results.append(scorer.score(read_features(feature_path), read_validity(validity_path)))
    write_jsonl(str(out / "scores.jsonl"), [r.score_record() for r in results])
    write_jsonl(str(out / "predictions.jsonl"), [r.prediction_record() for r in results])

    durations = sum(r.duration for r in results)
    if durations > 0:
        logger.info("Mean processing time ratio %.3f over %d videos", sum(r.elapsed for r in results) / durations, len(results))
    if args.charts:
        charts = ChartGenerator()
        for result in results:
            charts.write_html(charts.timeline_chart(result.prediction_record()),
                              str(out / "timelines" / f"{result.video_id}.html"))
    return 0


def calibration_table(records: Sequence[PredictionRecord], labels: Dict[str, int],
                      thetas: Sequence[float]) -> pd.DataFrame:
    """AUC and AP of the thresholded coverage score per theta.

    Raises:
        ContractViolation: a video has no label, or only one class is present
    """
    missing = [r.video_id for r in records if r.video_id not in labels]
    if missing:
        raise ContractViolation(f"no label for {len(missing)} videos, e.g. {missing[0]}")
    y = np.array([labels[r.video_id] for r in records], dtype=int)
    if y.min() == y.max():
        raise ContractViolation("calibration needs both real and fake videos")
    rows = []
    for theta in thetas:
        scores = np.array([psi_m(r.predictions(), theta, ValidSegments(list(r.valid_segments))) for r in records])
        defined = ~np.isnan(scores)
        if not defined.all():
            logger.warning("theta=%g: %d videos without valid segments excluded", theta, int((~defined).sum()))
        rows.append({
            "theta": theta,
            "auc": roc_auc(scores[defined], y[defined]),
            "ap": binary_ap(scores[defined], y[defined]),
        })
    return pd.DataFrame(rows)


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    thetas = [float(t) for t in args.thetas.split(",")] if args.thetas else DEFAULT_THETAS
    for theta in thetas:
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {theta}")
    out = prepare_out_dir(config)
    records = read_jsonl(args.predictions, PredictionRecord)
    label_table = pd.read_csv(args.labels, dtype={"video_id": str})
    labels = dict(zip(label_table["video_id"], label_table["label"].astype(int)))

    table = calibration_table(records, labels, thetas)
    table.to_csv(out / "calibration.csv", index=False)
    best = table.loc[table["auc"].idxmax()] if table["auc"].notna().any() else None
    summary = {"best_theta": None if best is None else float(best["theta"]),
               "best_auc": None if best is None else float(best["auc"])}
    (out / "calibration.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(table.to_string(index=False))
    print(f"best theta: {summary['best_theta']}")
    if args.charts:
        charts = ChartGenerator()
        charts.write_html(charts.calibration_chart(table, summary["best_theta"]), str(out / "calibration.html"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args, {"paths.manifest": args.manifest})
    ablations = [a for a in (args.ablations or "").split(",") if a]
    if args.grid:
        grid = GridSpec.parse(args.grid)
    else:
        grid = GridSpec() if ablations else GridSpec.appendix()
    grid = grid.model_copy(update={"ablations": grid.ablations + ablations})
    manifest = require_manifest(config)
    out = prepare_out_dir(config)

    db = Database(config.paths.db_path or str(out / "sweeps.db"))
    db.initialize_schema()
    try:
        table = grid_sweep(
            config, grid,
            Dataset.from_manifest(manifest, "train"),
            Dataset.from_manifest(manifest, "val"),
            str(out), db,
        )
    finally:
        db.close()
    print(table[["cell_id", "status", "criterion", "avg_rank", "best"]].to_string(index=False))
    if args.charts:
        charts = ChartGenerator()
        charts.write_html(charts.sweep_chart(table), str(out / "sweep.html"))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    t = args.t or config.synthetic.t
    model = ForgeryLocalizer(config.model)
    print(json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True))
    print(f"parameters: {model.parameter_count():,}")
    print(f"flops (t={t}): {model.estimate_flops(t):,}")
    print(f"pyramid level lengths (t={t}): {model.level_lengths(t)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="seed for data, initialization and shuffling")
    common.add_argument("--out", help="output directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override (repeatable)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="fakespan", description="Audio-visual forgery localization")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset and manifest")
    p.add_argument("--n", type=int, help="number of samples")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("train", parents=[common], help="train, then evaluate the best checkpoint on the test split")
    p.add_argument("--manifest", help="dataset manifest (defaults to paths.manifest)")
    p.add_argument("--resume", action="store_true", help="continue from last.avrm in the output directory")
    p.add_argument("--charts", action="store_true", help="write HTML charts")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="metric report of a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("score", parents=[common], help="score whole videos")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--validity", nargs="+", required=True)
    p.add_argument("--mode", choices=["psi_m", "psi_s", "video"])
    p.add_argument("--theta", type=float)
    p.add_argument("--chunk-seconds", type=float)
    p.add_argument("--min-segment-seconds", type=float)
    p.add_argument("--no-chunking", action="store_true")
    p.add_argument("--charts", action="store_true")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("calibrate", parents=[common], help="AUC/AP of the coverage score versus theta")
    p.add_argument("--predictions", required=True, help="predictions.jsonl written by score")
    p.add_argument("--labels", required=True, help="CSV with video_id,label columns")
    p.add_argument("--thetas", help="comma-separated theta grid")
    p.add_argument("--charts", action="store_true")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("sweep", parents=[common], help="hyperparameter grid and ablation sweep")
    p.add_argument("--manifest", help="dataset manifest (defaults to paths.manifest)")
    p.add_argument("--grid", help="'appendix', a JSON object or a JSON file")
    p.add_argument("--ablations", help="comma-separated ablation names, e.g. pairs:vv,op:product")
    p.add_argument("--charts", action="store_true")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("inspect", parents=[common], help="parameter count, FLOPs and level lengths")
    p.add_argument("--t", type=int, help="sequence length (defaults to synthetic.t)")
    p.set_defaults(handler=cmd_inspect)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
