"""Retrieval index: pre-encoded candidate embeddings plus provenance."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import ContractViolation

@dataclass
class RetrievalIndex:
    """Candidate ids with their matching representations, one checkpoint."""

    candidate_ids: list[str]
    embeddings: torch.Tensor  # (N, n_t, d_c) multi-head or (N, d_q) global
    model_fingerprint: str
    matching_mode: str

    def __post_init__(self):
        if len(self.candidate_ids) != self.embeddings.shape[0]:
            raise ContractViolation(
                "index must hold exactly one embedding set per candidate id"
            )
        if len(set(self.candidate_ids)) != len(self.candidate_ids):
            raise ContractViolation("index candidate ids must be unique")

    def __len__(self) -> int:
        return len(self.candidate_ids)


def build_index(candidates: list[tuple[str, torch.Tensor]], model) -> RetrievalIndex:
    """Encode and mix every candidate image once.

    Encoding is all-or-nothing: any failure aborts index construction so
    an evaluation can never silently run over a partial gallery.
    """
    ids = [cid for cid, _ in candidates]
    reps = [model.embed_candidate(image).detach() for _, image in candidates]
    embeddings = torch.stack(reps) if reps else torch.zeros((0,))
    return RetrievalIndex(
        candidate_ids=ids,
        embeddings=embeddings,
        model_fingerprint=model.fingerprint(),
        matching_mode=model.config.matching_mode,
    )


def save_index(index: RetrievalIndex, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        candidate_ids=np.array(index.candidate_ids),
        embeddings=index.embeddings.numpy(),
        model_fingerprint=np.array(index.model_fingerprint),
        matching_mode=np.array(index.matching_mode),
    )
    return path


def load_index(path: str | Path) -> RetrievalIndex:
    data = np.load(path, allow_pickle=False)
    return RetrievalIndex(
        candidate_ids=[str(x) for x in data["candidate_ids"]],
        embeddings=torch.from_numpy(data["embeddings"]),
        model_fingerprint=str(data["model_fingerprint"]),
        matching_mode=str(data["matching_mode"]),
    )
