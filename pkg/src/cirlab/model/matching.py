"""Similarity scoring between mixed query and candidate embeddings.

Multi-head matching treats each row of the ``(n_t, d_c)`` mixed embeddings
as one head and scores a pair as the sum of per-head cosine similarities,
so the score lives in ``[-n_t, n_t]``. A global-mean variant (cosine of
token-mean vectors) is kept as the ablation baseline.

Numerical contract: exactly-parallel heads score exactly +/-1 (detected via
the Cauchy-Schwarz equality ``dot(a,b)^2 == dot(a,a)*dot(b,b)``, which holds
bitwise for identical or negated rows), zero-norm rows contribute 0 instead
of NaN (squared-norm product floored at ``NORM_EPS**4``), and every head is
clamped to ``[-1, 1]`` so the score bound is unconditional.
"""

import torch

from ..errors import ContractViolation

NORM_EPS = 1e-8


def row_cosines(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Per-row cosine similarities of two ``(n, d)`` matrices."""
    if a.shape != b.shape or a.ndim != 2:
        raise ContractViolation(
            f"expected two equal-shape (n, d) matrices, got {tuple(a.shape)} "
            f"and {tuple(b.shape)}"
        )
    dot_ab = (a * b).sum(dim=-1)
    dot_aa = (a * a).sum(dim=-1)
    dot_bb = (b * b).sum(dim=-1)
    sq_prod = dot_aa * dot_bb
    parallel = (dot_ab * dot_ab == sq_prod) & (sq_prod > 0)
    denom = torch.sqrt(torch.clamp(sq_prod, min=NORM_EPS**4))
    cos = torch.where(parallel, torch.sign(dot_ab), dot_ab / denom)
    return torch.clamp(cos, -1.0, 1.0)


def multi_head_similarity(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Sum of per-head cosines for two ``(n_t, d_c)`` embedding matrices."""
    return row_cosines(a, b).sum()


def global_cosine(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Cosine similarity of two single vectors (ablation-mode scoring)."""
    if a.shape != b.shape or a.ndim != 1:
        raise ContractViolation(
            f"expected two equal-length vectors, got {tuple(a.shape)} "
            f"and {tuple(b.shape)}"
        )
    return row_cosines(a.unsqueeze(0), b.unsqueeze(0)).sum()
