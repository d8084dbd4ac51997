"""Similarity-based reference/target pairing.

Each image is paired within its own (source, category) bucket, never with
another view of the same item: candidates are ranked by cosine similarity
and the target is drawn uniformly at random from the top ``k`` so the
dataset is not dominated by nearest-neighbor pairs. Selection is seeded
and iteration order is sorted, so a fixed seed reproduces the pair list
byte for byte.
"""

import logging

import numpy as np

from ..seeding import np_rng
from .records import CandidatePair, ImageRecord

log = logging.getLogger(__name__)

DEFAULT_TOP_K = 20
DEFAULT_MIN_SIMILARITY = 0.3


def pair_images(
    records: list[ImageRecord],
    embeddings: dict[str, np.ndarray],
    k: int = DEFAULT_TOP_K,
    seed: int = 0,
    min_similarity: float = DEFAULT_MIN_SIMILARITY,
    exclude_ids: set[str] | None = None,
) -> list[CandidatePair]:
    """Pick one target among each reference's top-``k`` most similar images.

    Candidates share the reference's source and category but never its
    item group. Buckets smaller than ``k + 1`` fall back to all available
    candidates (logged); references with no candidates or no embedding are
    skipped (logged). ``exclude_ids`` removes held-out images entirely.
    """
    exclude_ids = exclude_ids or set()
    eligible = [r for r in records if r.id not in exclude_ids]
    buckets: dict[tuple[str, str], list[ImageRecord]] = {}
    for record in eligible:
        buckets.setdefault((record.source, record.category), []).append(record)

    rng = np_rng(seed, "pairing")
    pairs: list[CandidatePair] = []
    for key in sorted(buckets):
        bucket = sorted(buckets[key], key=lambda r: r.id)
        embedded = [r for r in bucket if r.id in embeddings]
        for r in bucket:
            if r.id not in embeddings:
                log.warning("no embedding for %s; skipped as reference", r.id)
        if len(embedded) < k + 1:
            log.warning(
                "bucket %s has %d embedded images (< k+1 = %d); using all candidates",
                key, len(embedded), k + 1,
            )
        matrix = np.stack([embeddings[r.id] for r in embedded]) if embedded else None
        for idx, reference in enumerate(embedded):
            mask = np.array(
                [
                    c.id != reference.id and c.item_group != reference.item_group
                    for c in embedded
                ]
            )
            if not mask.any():
                log.warning("no eligible candidates for %s; skipped", reference.id)
                continue
            sims = matrix[mask] @ embeddings[reference.id]
            candidates = [c for c, keep in zip(embedded, mask) if keep]
            order = sorted(
                range(len(candidates)), key=lambda j: (-sims[j], candidates[j].id)
            )
            top = order[: min(k, len(order))]
            choice = int(rng.integers(len(top)))
            chosen = top[choice]
            similarity = float(np.clip(sims[chosen], -1.0, 1.0))
            pairs.append(
                CandidatePair(
                    reference_id=reference.id,
                    target_id=candidates[chosen].id,
                    similarity=similarity,
                    rank_of_target=choice + 1,
                    low_similarity=similarity < min_similarity,
                )
            )
    return pairs
