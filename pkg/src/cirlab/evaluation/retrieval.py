"""Query-time retrieval and recall@k arithmetic."""

import torch

from ..errors import ContractViolation, DataError
from .index import RetrievalIndex


def retrieve(
    model,
    reference_image: torch.Tensor,
    modification_text: str,
    index: RetrievalIndex,
    k: int,
) -> list[tuple[str, float]]:
    """Top-``k`` candidates for a composed query, best first.

    Scores every candidate in the index, sorts by descending score with
    ties broken by ascending id, and returns ``(id, score)`` pairs. The
    index must come from the same checkpoint as ``model`` (fingerprints
    are compared) and ``k`` must not exceed the index size.
    """
    if k < 1 or k > len(index):
        raise ContractViolation(
            f"k must be in [1, {len(index)}] for this index, got {k}"
        )
    if index.model_fingerprint != model.fingerprint():
        raise ContractViolation(
            "index was built from a different checkpoint than this model"
        )
    query = model.embed_query(reference_image, modification_text).detach()
    scored = [
        (cid, float(model.similarity(query, index.embeddings[i])))
        for i, cid in enumerate(index.candidate_ids)
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def recall_at_k(
    results: dict[str, list[str]],
    ground_truth: dict[str, str],
    k: int,
) -> float:
    """Percentage of queries whose true target appears in the top ``k``."""
    if not results:
        raise ContractViolation("recall needs at least one query result")
    missing = sorted(set(results) - set(ground_truth))
    if missing:
        raise DataError(f"queries missing ground truth: {missing[:10]}")
    hits = sum(
        1 for query, ranked in results.items() if ground_truth[query] in ranked[:k]
    )
    return 100.0 * hits / len(results)
