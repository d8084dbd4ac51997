"""Pipeline stage orchestration shared by the CLI.

Stages communicate through files in the configured workspace so each one
can run (and re-run) independently: ``embed`` fills the vector cache,
``pair`` writes ``pairs.jsonl``, ``caption`` and ``synthesize`` write the
annotation manifests plus failure sidecars, ``build`` assembles
``triplets.jsonl`` with statistics, and ``enhance`` re-annotates an
evaluation pool into ``enhanced/``. Relative paths in the config resolve
against the config file's directory.
"""

import dataclasses
import json
import logging
from pathlib import Path

from ..config import RunConfig
from ..errors import ConfigurationError
from .annotate import caption_batch, synthesize_batch
from .build import build_dataset, build_enhanced_eval
from .clients import HttpServiceClient, ManagedClient, RateLimiter, RequestBudget, RetryPolicy
from .embeddings import EmbeddingStore, compute_embeddings, make_embedder
from .mocks import MockCaptionService, MockModificationService
from .pairing import pair_images
from .records import (
    CandidatePair,
    CaptionRecord,
    ImageRecord,
    ModificationRecord,
    read_image_manifest,
    read_jsonl,
    read_triplet_manifest,
    write_jsonl,
)

log = logging.getLogger(__name__)

PIPELINE_STAGES = ("embed", "pair", "caption", "synthesize", "build", "enhance", "all")


class PipelinePaths:
    """Resolved file layout for one pipeline workspace."""

    def __init__(self, config: RunConfig, base: Path):
        self.manifest = _resolve(base, config.pipeline.images_manifest)
        self.workspace = _resolve(base, config.pipeline.workspace)
        cache = config.pipeline.cache_dir
        self.cache_dir = _resolve(base, cache) if cache else self.workspace / "cache"
        self.pairs = self.workspace / "pairs.jsonl"
        self.captions = self.workspace / "captions.jsonl"
        self.caption_failures = self.workspace / "caption_failures.jsonl"
        self.modifications = self.workspace / "modifications.jsonl"
        self.synthesis_failures = self.workspace / "synthesis_failures.jsonl"
        self.triplets = self.workspace / "triplets.jsonl"
        self.images_out = self.workspace / "images.jsonl"
        self.stats_json = self.workspace / "stats.json"
        self.stats_txt = self.workspace / "stats.txt"
        self.enhanced_dir = self.workspace / "enhanced"


def _resolve(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else (base / p)


def _load_records(paths: PipelinePaths) -> tuple[list[ImageRecord], Path]:
    if not paths.manifest.exists():
        raise ConfigurationError(f"image manifest not found: {paths.manifest}")
    records = list(read_image_manifest(paths.manifest).values())
    return records, paths.manifest.parent


def _holdout_ids(config: RunConfig, base: Path) -> set[str]:
    if not config.pipeline.holdout_manifest:
        return set()
    path = _resolve(base, config.pipeline.holdout_manifest)
    return set(read_image_manifest(path))


def make_clients(config: RunConfig, mock: bool, image_root: Path):
    """Caption and synthesis clients sharing one budget and rate limit."""
    budget = RequestBudget(config.pipeline.budget.max_requests)
    limiter = RateLimiter(config.pipeline.budget.rate_per_s)
    if mock:
        caption = MockCaptionService(root=image_root)
        synthesis = MockModificationService()
    else:
        caption = HttpServiceClient(
            config.pipeline.caption_endpoint or "",
            name="caption-service",
            api_key_env=config.pipeline.api_key_env,
            timeout_s=config.pipeline.budget.timeout_s,
        )
        synthesis = HttpServiceClient(
            config.pipeline.synthesis_endpoint or "",
            name="synthesis-service",
            api_key_env=config.pipeline.api_key_env,
            timeout_s=config.pipeline.budget.timeout_s,
        )
    return (
        ManagedClient(caption, limiter=limiter, budget=budget),
        ManagedClient(synthesis, limiter=limiter, budget=budget),
    )


def stage_embed(config: RunConfig, base: Path) -> dict:
    paths = PipelinePaths(config, base)
    records, root = _load_records(paths)
    embedder = make_embedder(config.pipeline.embedder, config.pipeline.embed_dim)
    store = EmbeddingStore(paths.cache_dir)
    vectors, skipped = compute_embeddings(records, embedder, store=store, root=root)
    paths.workspace.mkdir(parents=True, exist_ok=True)
    summary = {"embedded": len(vectors), "skipped": sorted(skipped)}
    (paths.workspace / "embed_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    return summary


def stage_pair(config: RunConfig, base: Path) -> dict:
    paths = PipelinePaths(config, base)
    records, root = _load_records(paths)
    embedder = make_embedder(config.pipeline.embedder, config.pipeline.embed_dim)
    store = EmbeddingStore(paths.cache_dir)
    vectors, _ = compute_embeddings(records, embedder, store=store, root=root)
    pairs = pair_images(
        records,
        vectors,
        k=config.pipeline.top_k,
        seed=config.seed,
        min_similarity=config.pipeline.min_similarity,
        exclude_ids=_holdout_ids(config, base),
    )
    write_jsonl(paths.pairs, pairs)
    return {"pairs": len(pairs)}


def _read_pairs(paths: PipelinePaths) -> list[CandidatePair]:
    if not paths.pairs.exists():
        raise ConfigurationError(
            f"{paths.pairs} not found; run the pair stage first"
        )
    return [CandidatePair(**row) for row in read_jsonl(paths.pairs)]


def stage_caption(config: RunConfig, base: Path, mock: bool = False) -> dict:
    paths = PipelinePaths(config, base)
    records, root = _load_records(paths)
    by_id = {r.id: r for r in records}
    pairs = _read_pairs(paths)
    needed = sorted({p.reference_id for p in pairs} | {p.target_id for p in pairs})
    caption_client, _ = make_clients(config, mock, root)
    outcome = caption_batch(
        [by_id[i] for i in needed],
        caption_client,
        retry=RetryPolicy(),
        max_tokens=config.pipeline.caption_max_tokens,
        workers=config.pipeline.workers,
    )
    write_jsonl(paths.captions, outcome.succeeded)
    write_jsonl(paths.caption_failures, outcome.failed)
    return {"captions": len(outcome.succeeded), "failed": len(outcome.failed)}


def stage_synthesize(config: RunConfig, base: Path, mock: bool = False) -> dict:
    paths = PipelinePaths(config, base)
    _, root = _load_records(paths)
    pairs = _read_pairs(paths)
    if not paths.captions.exists():
        raise ConfigurationError(
            f"{paths.captions} not found; run the caption stage first"
        )
    captions = {
        row["image_id"]: CaptionRecord(**row) for row in read_jsonl(paths.captions)
    }
    _, synthesis_client = make_clients(config, mock, root)
    outcome = synthesize_batch(
        pairs, captions, synthesis_client,
        retry=RetryPolicy(), workers=config.pipeline.workers,
    )
    write_jsonl(paths.modifications, outcome.succeeded)
    write_jsonl(paths.synthesis_failures, outcome.failed)
    return {"modifications": len(outcome.succeeded), "failed": len(outcome.failed)}


def stage_build(config: RunConfig, base: Path) -> dict:
    paths = PipelinePaths(config, base)
    records, root = _load_records(paths)
    pairs = _read_pairs(paths)
    for name, path in (("caption", paths.captions), ("synthesize", paths.modifications)):
        if not path.exists():
            raise ConfigurationError(f"{path} not found; run the {name} stage first")
    captions = {
        row["image_id"]: CaptionRecord(**row) for row in read_jsonl(paths.captions)
    }
    modifications = [
        ModificationRecord(**row) for row in read_jsonl(paths.modifications)
    ]
    images = {r.id: r for r in records}
    result = build_dataset(
        pairs, captions, modifications, images,
        holdout_ids=_holdout_ids(config, base) or None,
    )
    write_jsonl(paths.triplets, result.triplets)
    used = sorted(
        {t.reference_id for t in result.triplets}
        | {t.target_id for t in result.triplets}
    )
    out_records = []
    for image_id in used:
        record = images[image_id]
        absolute = dataclasses.replace(
            record, path=str(_resolve(root, record.path))
        )
        out_records.append(absolute)
    write_jsonl(paths.images_out, out_records)
    stats = dataclasses.asdict(result.statistics)
    paths.stats_json.write_text(
        json.dumps({"statistics": stats, "excluded": result.excluded}, indent=2,
                   sort_keys=True) + "\n",
        encoding="utf-8",
    )
    paths.stats_txt.write_text(result.statistics.render_table() + "\n", encoding="utf-8")
    return {"triplets": len(result.triplets), "excluded": result.excluded}


def stage_enhance(config: RunConfig, base: Path, mock: bool = False) -> dict:
    paths = PipelinePaths(config, base)
    records, root = _load_records(paths)
    caption_client, synthesis_client = make_clients(config, mock, root)
    embedder = make_embedder(config.pipeline.embedder, config.pipeline.embed_dim)
    store = EmbeddingStore(paths.cache_dir)
    result = build_enhanced_eval(
        records,
        caption_client,
        synthesis_client,
        embedder,
        store=store,
        root=root,
        k=config.pipeline.top_k,
        seed=config.seed,
        workers=config.pipeline.workers,
    )
    out = paths.enhanced_dir
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "triplets.jsonl", result.triplets)
    used = sorted(
        {t.reference_id for t in result.triplets}
        | {t.target_id for t in result.triplets}
    )
    by_id = {r.id: r for r in records}
    write_jsonl(
        out / "images.jsonl",
        [
            dataclasses.replace(by_id[i], path=str(_resolve(root, by_id[i].path)))
            for i in used
        ],
    )
    (out / "stats.txt").write_text(
        result.statistics.render_table() + "\n", encoding="utf-8"
    )
    return {"triplets": len(result.triplets), "excluded": result.excluded}


def run_stage(name: str, config: RunConfig, base: Path, mock: bool = False) -> dict:
    """Dispatch one named stage (or ``all`` for embed through build)."""
    if name == "embed":
        return stage_embed(config, base)
    if name == "pair":
        return stage_pair(config, base)
    if name == "caption":
        return stage_caption(config, base, mock=mock)
    if name == "synthesize":
        return stage_synthesize(config, base, mock=mock)
    if name == "build":
        return stage_build(config, base)
    if name == "enhance":
        return stage_enhance(config, base, mock=mock)
    if name == "all":
        summary = {}
        summary["embed"] = stage_embed(config, base)
        summary["pair"] = stage_pair(config, base)
        summary["caption"] = stage_caption(config, base, mock=mock)
        summary["synthesize"] = stage_synthesize(config, base, mock=mock)
        summary["build"] = stage_build(config, base)
        return summary
    raise ConfigurationError(f"unknown pipeline stage {name!r}")
