"""Dual-level mixing: token reduction then channel reduction.

A single pair of matrices maps ``(n_q, d_q)`` token embeddings to
``(n_t, d_c)``:

    mixed = W_tm @ x @ W_cm

Token mixing (``W_tm``, ``n_t x n_q``) compresses the token axis first;
channel mixing (``W_cm``, ``d_q x d_c``) then projects each reduced token
into the low-dimensional matching space. The whole map is linear. One
``Mixer`` instance is shared by the query and candidate branches so both
land in the same space — sharing is by object identity, never by copy.
"""

import math

import torch
from torch import nn

from ..errors import ConfigurationError, ContractViolation


class Mixer(nn.Module):
    """Shared token-mixing / channel-mixing projection."""

    def __init__(self, n_q: int, d_q: int, n_t: int, d_c: int,
                 generator: torch.Generator | None = None):
        super().__init__()
        if not n_t < n_q:
            raise ConfigurationError(f"token mixing must reduce: n_t={n_t} >= n_q={n_q}")
        if not d_c < d_q:
            raise ConfigurationError(f"channel mixing must reduce: d_c={d_c} >= d_q={d_q}")
        self.n_q, self.d_q, self.n_t, self.d_c = n_q, d_q, n_t, d_c
        w_tm = torch.empty(n_t, n_q, dtype=torch.float64)
        w_tm.normal_(0.0, 1.0 / math.sqrt(n_q), generator=generator)
        w_cm = torch.empty(d_q, d_c, dtype=torch.float64)
        w_cm.normal_(0.0, 1.0 / math.sqrt(d_q), generator=generator)
        self.W_tm = nn.Parameter(w_tm)
        self.W_cm = nn.Parameter(w_cm)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Mix ``(n_q, d_q)`` embeddings down to ``(n_t, d_c)``."""
        if x.shape[-2:] != (self.n_q, self.d_q):
            raise ContractViolation(
                f"mixer expects (..., {self.n_q}, {self.d_q}), "
                f"got {tuple(x.shape)}"
            )
        return self.W_tm @ x @ self.W_cm


def mix(x: torch.Tensor, mixer: Mixer) -> torch.Tensor:
    """Functional form of :meth:`Mixer.forward`."""
    return mixer(x)
