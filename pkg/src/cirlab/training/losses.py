"""Contrastive losses for composed retrieval and caption alignment.

Both tasks share one loss on an ``n x n`` score matrix whose diagonal
holds the positive pairs and whose off-diagonal entries are the in-batch
negatives:

    loss = -(1/n) * sum_i log( exp(s_ii / t) / sum_j exp(s_ij / t) )

computed with row-max subtraction for stability. The temperature ``t``
defaults to 1 so the raw scores enter the exponentials unscaled.
"""

import torch

from ..errors import ConfigurationError, ContractViolation
from .data import TripletBatch


def contrastive_loss(score_matrix: torch.Tensor, temperature: float = 1.0) -> torch.Tensor:
    """In-batch softmax cross-entropy with diagonal positives."""
    if score_matrix.ndim != 2 or score_matrix.shape[0] != score_matrix.shape[1]:
        raise ContractViolation(
            f"score matrix must be square, got {tuple(score_matrix.shape)}"
        )
    n = score_matrix.shape[0]
    if n < 2:
        raise ContractViolation("contrastive loss needs n >= 2")
    if not torch.isfinite(score_matrix).all():
        raise ContractViolation("score matrix contains non-finite entries")
    if temperature <= 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    logits = score_matrix / temperature
    row_max = logits.max(dim=1, keepdim=True).values
    shifted = logits - row_max
    log_softmax_diag = shifted.diagonal() - torch.log(torch.exp(shifted).sum(dim=1))
    return -log_softmax_diag.mean()


def _score_matrix(queries: list[torch.Tensor], candidates: list[torch.Tensor],
                  model) -> torch.Tensor:
    rows = [
        torch.stack([model.similarity(q, c) for c in candidates]) for q in queries
    ]
    return torch.stack(rows)


def cir_loss(batch: TripletBatch, model, temperature: float = 1.0) -> torch.Tensor:
    """Contrastive image-retrieval loss over a triplet batch."""
    queries = [
        model.embed_query(img, text)
        for img, text in zip(batch.reference_images, batch.modification_texts)
    ]
    candidates = [model.embed_candidate(img) for img in batch.target_images]
    return contrastive_loss(_score_matrix(queries, candidates, model), temperature)


def ctr_loss(batch: TripletBatch, model, temperature: float = 1.0) -> torch.Tensor:
    """Contrastive caption-retrieval loss; needs per-target captions."""
    if batch.target_captions is None or any(not c for c in batch.target_captions):
        raise ConfigurationError(
            "caption-retrieval loss needs target captions, but this dataset "
            "does not provide image-caption pairs; disable the auxiliary task"
        )
    queries = [
        model.embed_query(img, text)
        for img, text in zip(batch.reference_images, batch.modification_texts)
    ]
    captions = [model.embed_caption(text) for text in batch.target_captions]
    return contrastive_loss(_score_matrix(queries, captions, model), temperature)
