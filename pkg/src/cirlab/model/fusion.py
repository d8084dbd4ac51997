"""Text-guided query fusion.

A fixed set of learnable query tokens distills an image feature map into
``(n_q, d_q)`` embeddings through a small stack of cross-attention layers:
queries attend to the modification-text tokens (when a text is given),
then to the projected image tokens, then pass through an MLP, each with a
residual connection. Candidate images run the same weights with the text
branch skipped entirely; captions run the same weights with the image
branch skipped (the text pathway doubles as the caption encoder).
"""

import torch
from torch import nn

from ..errors import ContractViolation
from ..text import hash_token_id, tokenize
from .backbone import ImageFeatureMap, sinusoidal_positions
from .config import ModelConfig


class FusionLayer(nn.Module):
    def __init__(self, d_q: int, heads: int):
        super().__init__()
        kw = {"dtype": torch.float64}
        self.text_norm = nn.LayerNorm(d_q, **kw)
        self.text_attn = nn.MultiheadAttention(d_q, heads, batch_first=True, **kw)
        self.image_norm = nn.LayerNorm(d_q, **kw)
        self.image_attn = nn.MultiheadAttention(d_q, heads, batch_first=True, **kw)
        self.mlp_norm = nn.LayerNorm(d_q, **kw)
        self.mlp = nn.Sequential(
            nn.Linear(d_q, 2 * d_q, **kw),
            nn.GELU(),
            nn.Linear(2 * d_q, d_q, **kw),
        )

    def forward(
        self,
        queries: torch.Tensor,
        text_kv: torch.Tensor | None,
        image_kv: torch.Tensor | None,
    ) -> torch.Tensor:
        q = queries
        if text_kv is not None:
            attended, _ = self.text_attn(
                self.text_norm(q).unsqueeze(0), text_kv.unsqueeze(0), text_kv.unsqueeze(0)
            )
            q = q + attended.squeeze(0)
        if image_kv is not None:
            attended, _ = self.image_attn(
                self.image_norm(q).unsqueeze(0), image_kv.unsqueeze(0), image_kv.unsqueeze(0)
            )
            q = q + attended.squeeze(0)
        return q + self.mlp(self.mlp_norm(q))


class QueryFusion(nn.Module):
    """Learnable query tokens plus the cross-attention fusion stack."""

    def __init__(self, config: ModelConfig, d_image: int):
        super().__init__()
        self.config = config
        self.query_tokens = nn.Parameter(
            0.02 * torch.randn(config.n_q, config.d_q, dtype=torch.float64)
        )
        self.token_embed = nn.Parameter(
            0.02 * torch.randn(config.vocab_size, config.d_q, dtype=torch.float64)
        )
        self.image_proj = nn.Linear(d_image, config.d_q, dtype=torch.float64)
        self.layers = nn.ModuleList(
            FusionLayer(config.d_q, config.fusion_heads)
            for _ in range(config.fusion_layers)
        )

    def embed_text(self, text: str) -> torch.Tensor:
        """Tokenize, truncate, and embed a text into ``(L, d_q)`` vectors."""
        tokens = tokenize(text)
        if not tokens:
            raise ContractViolation("text is empty after normalization")
        tokens = tokens[: self.config.text_max_tokens]
        ids = torch.tensor(
            [hash_token_id(tok, self.config.vocab_size) for tok in tokens]
        )
        embedded = self.token_embed[ids]
        return embedded + sinusoidal_positions(len(tokens), self.config.d_q)

    def _fuse(self, feature_map: ImageFeatureMap, text: str | None) -> torch.Tensor:
        text_kv = self.embed_text(text) if text is not None else None
        image_kv = self.image_proj(feature_map.tokens().to(torch.float64))
        q = self.query_tokens
        for layer in self.layers:
            q = layer(q, text_kv, image_kv)
        return q

    def fuse_query(self, feature_map: ImageFeatureMap, text: str) -> torch.Tensor:
        """Multimodal query embeddings ``(n_q, d_q)``; text is mandatory."""
        if text is None or not tokenize(text):
            raise ContractViolation(
                "composed retrieval requires a non-empty modification text"
            )
        return self._fuse(feature_map, text)

    def encode_candidate(self, feature_map: ImageFeatureMap) -> torch.Tensor:
        """Candidate embeddings ``(n_q, d_q)``: same weights, no text branch."""
        return self._fuse(feature_map, None)

    def encode_text(self, text: str) -> torch.Tensor:
        """Caption embeddings ``(n_q, d_q)``: text branch only, no image."""
        if text is None or not tokenize(text):
            raise ContractViolation("cannot encode an empty text")
        text_kv = self.embed_text(text)
        q = self.query_tokens
        for layer in self.layers:
            q = layer(q, text_kv, None)
        return q
