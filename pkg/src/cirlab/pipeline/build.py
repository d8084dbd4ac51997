"""Dataset assembly: triplet manifests, statistics, enhanced eval splits."""

import logging
from dataclasses import dataclass

from ..errors import DataError
from ..text import tokenize
from .annotate import caption_batch, synthesize_batch
from .clients import RetryPolicy, ServiceClient
from .embeddings import EmbeddingStore, ImageEmbedder, compute_embeddings
from .pairing import pair_images
from .records import (
    CandidatePair,
    CaptionRecord,
    CirTriplet,
    ImageRecord,
    ModificationRecord,
)

log = logging.getLogger(__name__)


@dataclass
class DatasetStatistics:
    """Corpus-level counts in the shape of a dataset comparison table."""

    triplet_count: int
    unique_images: int
    modification_vocab_size: int
    modification_avg_tokens: float
    caption_vocab_size: int
    caption_avg_tokens: float

    def render_table(self) -> str:
        rows = [
            ("Triplets", f"{self.triplet_count}"),
            ("Unique images", f"{self.unique_images}"),
            ("Modification vocab size", f"{self.modification_vocab_size}"),
            ("Modification avg length", f"{self.modification_avg_tokens:.2f}"),
            ("Caption vocab size", f"{self.caption_vocab_size}"),
            ("Caption avg length", f"{self.caption_avg_tokens:.2f}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def compute_statistics(triplets: list[CirTriplet]) -> DatasetStatistics:
    """Count triplets, images, vocabulary, and average token lengths.

    Tokenization is the package-wide rule (lowercase, split on whitespace
    and punctuation). Caption statistics run over unique images so an
    image referenced by many triplets counts once.
    """
    image_ids = set()
    mod_vocab: set[str] = set()
    mod_token_total = 0
    captions: dict[str, str] = {}
    for t in triplets:
        image_ids.add(t.reference_id)
        image_ids.add(t.target_id)
        tokens = tokenize(t.modification_text)
        mod_vocab.update(tokens)
        mod_token_total += len(tokens)
        if t.reference_caption:
            captions[t.reference_id] = t.reference_caption
        if t.target_caption:
            captions[t.target_id] = t.target_caption
    caption_vocab: set[str] = set()
    caption_token_total = 0
    for caption in captions.values():
        tokens = tokenize(caption)
        caption_vocab.update(tokens)
        caption_token_total += len(tokens)
    n = len(triplets)
    return DatasetStatistics(
        triplet_count=n,
        unique_images=len(image_ids),
        modification_vocab_size=len(mod_vocab),
        modification_avg_tokens=mod_token_total / n if n else 0.0,
        caption_vocab_size=len(caption_vocab),
        caption_avg_tokens=caption_token_total / len(captions) if captions else 0.0,
    )


@dataclass
class BuildResult:
    triplets: list[CirTriplet]
    statistics: DatasetStatistics
    excluded: dict[str, int]


def build_dataset(
    pairs: list[CandidatePair],
    captions: dict[str, CaptionRecord],
    modifications: list[ModificationRecord],
    images: dict[str, ImageRecord],
    holdout_ids: set[str] | None = None,
) -> BuildResult:
    """Assemble triplets from pairs whose annotation stages all succeeded.

    Pairs with a missing caption or a missing or degenerate (no-change)
    modification are excluded and counted. Ids that do not resolve in the
    image manifest are a hard error, as is any overlap with a supplied
    holdout list (leakage guard).
    """
    referenced = {p.reference_id for p in pairs} | {p.target_id for p in pairs}
    dangling = sorted(referenced - set(images))
    if dangling:
        raise DataError(
            f"pairs reference ids missing from the image manifest: {dangling[:10]}"
        )

    by_pair = {(m.reference_id, m.target_id): m for m in modifications}
    excluded = {"missing_caption": 0, "missing_modification": 0, "no_change": 0}
    triplets: list[CirTriplet] = []
    for pair in pairs:
        ref_cap = captions.get(pair.reference_id)
        tgt_cap = captions.get(pair.target_id)
        if ref_cap is None or tgt_cap is None:
            excluded["missing_caption"] += 1
            continue
        modification = by_pair.get((pair.reference_id, pair.target_id))
        if modification is None:
            excluded["missing_modification"] += 1
            continue
        if modification.no_change:
            excluded["no_change"] += 1
            continue
        triplets.append(
            CirTriplet(
                reference_id=pair.reference_id,
                target_id=pair.target_id,
                modification_text=modification.text,
                reference_caption=ref_cap.caption,
                target_caption=tgt_cap.caption,
                provenance={
                    "similarity": pair.similarity,
                    "rank_of_target": pair.rank_of_target,
                    "low_similarity": pair.low_similarity,
                    "caption_generator": ref_cap.generator,
                    "modification_generator": modification.generator,
                    "modification_fingerprint": modification.prompt_fingerprint,
                },
            )
        )
    if holdout_ids:
        used = {t.reference_id for t in triplets} | {t.target_id for t in triplets}
        leaked = sorted(used & set(holdout_ids))
        if leaked:
            raise DataError(
                f"holdout images leaked into the training manifest: {leaked[:10]}"
            )
    for key, count in excluded.items():
        if count:
            log.info("excluded %d pairs (%s)", count, key)
    return BuildResult(
        triplets=triplets, statistics=compute_statistics(triplets), excluded=excluded
    )


def build_enhanced_eval(
    records: list[ImageRecord],
    caption_client: ServiceClient,
    synthesis_client: ServiceClient,
    embedder: ImageEmbedder,
    store: EmbeddingStore | None = None,
    root: str = ".",
    k: int = 20,
    seed: int = 0,
    retry: RetryPolicy | None = None,
    workers: int = 1,
) -> BuildResult:
    """Re-annotate an evaluation pool: one triplet per unique image.

    Runs the full pipeline inside the pool — every image serves as the
    reference of exactly one pair (barring pairing or annotation
    failures), paired and annotated exactly like the training corpus.
    """
    images = {r.id: r for r in records}
    vectors, _ = compute_embeddings(records, embedder, store=store, root=root)
    pairs = pair_images(records, vectors, k=k, seed=seed)
    needed_ids = sorted({p.reference_id for p in pairs} | {p.target_id for p in pairs})
    caption_outcome = caption_batch(
        [images[i] for i in needed_ids], caption_client, retry=retry, workers=workers
    )
    captions = {c.image_id: c for c in caption_outcome.succeeded}
    synthesis_outcome = synthesize_batch(
        pairs, captions, synthesis_client, retry=retry, workers=workers
    )
    return build_dataset(pairs, captions, synthesis_outcome.succeeded, images)
