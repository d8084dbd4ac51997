"""Unified command-line entry point.

Subcommands: ``pipeline`` (triplet construction stages), ``train`` (one
training stage into a run directory), ``eval`` (recall@k report from a
checkpoint), and ``quality`` (audit-sheet sampling and aggregation). Every
run directory receives a config snapshot so results can be reproduced from
the directory alone. Exit codes: 0 success, 1 error, 2 usage, 3 partial
annotation success.
"""

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, load_config, save_config
from .errors import (
    BudgetExceededError,
    CheckpointError,
    ConfigurationError,
    ContractViolation,
    DataError,
    ServiceError,
)
from .evaluation.quality import (
    QualitySheet,
    aggregate_quality,
    render_quality_table,
    sample_quality,
)
from .evaluation.report import evaluate, write_report
from .model.checkpoint import load_model, save_checkpoint
from .model.network import CirModel
from .pipeline.records import read_image_manifest, read_jsonl, read_triplet_manifest, write_jsonl
from .pipeline.stages import PIPELINE_STAGES, run_stage
from .seeding import substream
from .training.data import TripletDataset
from .training.loop import STAGE1, STAGE2, train_stage

_ERRORS = (
    BudgetExceededError,
    CheckpointError,
    ConfigurationError,
    ContractViolation,
    DataError,
    ServiceError,
    OSError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cirlab",
        description="Composed image retrieval laboratory: data pipeline, "
        "training, evaluation, quality audit.",
    )
    parser.add_argument(
        "--mock", dest="mock_global", action="store_true",
        help="use deterministic local annotation services",
    )
    sub = parser.add_subparsers(dest="command")

    p_pipe = sub.add_parser("pipeline", help="run a triplet-construction stage")
    p_pipe.add_argument("stage", choices=PIPELINE_STAGES)
    p_pipe.add_argument("--config", required=True, help="YAML run config")
    p_pipe.add_argument("--mock", action="store_true",
                        help="use deterministic local annotation services")

    p_train = sub.add_parser("train", help="run one training stage")
    p_train.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--data", required=True,
                         help="dataset directory (images.jsonl + triplets.jsonl)")
    p_train.add_argument("--out", required=True, help="run directory")
    p_train.add_argument("--seed", type=int, default=None,
                         help="override the config's top-level seed")

    p_eval = sub.add_parser("eval", help="recall@k evaluation from a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--categories", nargs="*", default=None)
    p_eval.add_argument("--k", type=int, nargs="*", default=[10, 50])
    p_eval.add_argument("--dump-qualitative", type=int, default=0)

    p_quality = sub.add_parser("quality", help="quality-audit sheets")
    qsub = p_quality.add_subparsers(dest="quality_command")
    q_sample = qsub.add_parser("sample", help="emit blank stratified score sheets")
    q_sample.add_argument("--data", required=True,
                          help="dataset directory or triplet manifest")
    q_sample.add_argument("--out", required=True, help="sheet file to write")
    q_sample.add_argument("--n", type=int, default=216)
    q_sample.add_argument("--seed", type=int, default=0)
    q_agg = qsub.add_parser("aggregate", help="aggregate filled score sheets")
    q_agg.add_argument("--sheets", required=True)
    q_agg.add_argument("--out", default=None, help="optional JSON output path")
    q_agg.add_argument("--tag", default="dataset", help="row label for the table")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage()
        return 2
    mock = getattr(args, "mock", False) or args.mock_global
    try:
        if args.command == "pipeline":
            return _cmd_pipeline(args, mock)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "quality":
            return _cmd_quality(args, parser)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


def main() -> None:
    sys.exit(run(sys.argv[1:]))


def _cmd_pipeline(args, mock: bool) -> int:
    config = load_config(args.config)
    base = Path(args.config).resolve().parent
    workspace = Path(config.pipeline.workspace)
    if not workspace.is_absolute():
        workspace = base / workspace
    workspace.mkdir(parents=True, exist_ok=True)
    save_config(config, workspace / "config_snapshot.yaml")
    summary = run_stage(args.stage, config, base, mock=mock)
    print(json.dumps({"stage": args.stage, "summary": summary}))
    flat = summary if args.stage != "all" else {
        k: v for stage in summary.values() for k, v in stage.items()
    }
    return 3 if flat.get("failed") else 0


def _apply_stage_choice(config: RunConfig, stage: int) -> None:
    if stage == 1:
        config.stage.stage = STAGE1
        config.stage.frozen_groups |= {"backbone"}
    else:
        config.stage.stage = STAGE2
        config.stage.frozen_groups |= {"backbone", "adapters"}
        config.stage.use_ctr = False
    config.stage.validate()


def _cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.stage.seed = substream(args.seed, "train")
    _apply_stage_choice(config, args.stage)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / "config_snapshot.yaml")
    dataset = TripletDataset.from_dir(args.data)
    model = CirModel.build(config.model, seed=substream(config.seed, "model"))
    result = train_stage(dataset, config.stage, model, out_dir=out_dir)
    final = save_checkpoint(model, out_dir / "final.pt")
    last = result.metrics[-1] if result.metrics else {}
    print(
        json.dumps(
            {
                "steps": len(result.metrics),
                "final_loss_cir": last.get("loss_cir"),
                "checkpoint": str(final),
            }
        )
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.checkpoint)
    dataset = TripletDataset.from_dir(args.data)
    report, qualitative = evaluate(
        dataset,
        model,
        categories=args.categories or None,
        k_values=tuple(args.k),
        dataset_tag=Path(args.data).name,
        dump_qualitative=args.dump_qualitative,
    )
    write_report(report, qualitative, args.out)
    print(report.render_table())
    return 0


def _cmd_quality(args, parser: argparse.ArgumentParser) -> int:
    if args.quality_command == "sample":
        data = Path(args.data)
        if data.is_dir():
            triplets = read_triplet_manifest(data / "triplets.jsonl")
            images = read_image_manifest(data / "images.jsonl")
        else:
            triplets = read_triplet_manifest(data)
            images = {}
        categories = {image_id: record.category for image_id, record in images.items()}
        sheets = sample_quality(triplets, categories, n=args.n, seed=args.seed)
        write_jsonl(args.out, sheets)
        print(json.dumps({"sheets": len(sheets), "out": str(args.out)}))
        return 0
    if args.quality_command == "aggregate":
        sheets = [QualitySheet(**row) for row in read_jsonl(args.sheets)]
        summaries = aggregate_quality(sheets)
        print(render_quality_table(summaries, dataset_tag=args.tag))
        if args.out:
            payload = {
                name: {"mean": s.mean, "std": s.std, "formatted": s.formatted()}
                for name, s in summaries.items()
            }
            Path(args.out).write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        return 0
    parser.parse_args(["quality", "--help"])
    return 2
