"""Model hyperparameter configuration."""

from dataclasses import dataclass, field

from ..errors import ConfigurationError

MATCHING_MODES = ("multi_head", "global_mean")


@dataclass
class BackboneConfig:
    """Stand-in image encoder geometry (deterministic, desk scale)."""

    layers: int = 2
    width: int = 32
    patch_size: int = 4
    image_size: int = 16

    def validate(self) -> None:
        if self.layers < 1:
            raise ConfigurationError("backbone.layers must be >= 1")
        if self.width < 1:
            raise ConfigurationError("backbone.width must be >= 1")
        if self.image_size % self.patch_size != 0:
            raise ConfigurationError(
                "backbone.image_size must be a multiple of backbone.patch_size"
            )


@dataclass
class ModelConfig:
    """Dimensions and switches of the retrieval model.

    Defaults are the full-scale operating point (32 query tokens at
    dimension 768, mixed down to 12 tokens at dimension 256, adapter
    bottleneck ratio 16, 128-token text limit); tests override them with
    desk-scale values.
    """

    n_q: int = 32
    d_q: int = 768
    n_t: int = 12
    d_c: int = 256
    downsample_factor: int = 16
    text_max_tokens: int = 128
    adapters_enabled: bool = True
    matching_mode: str = "multi_head"
    fusion_layers: int = 2
    fusion_heads: int = 8
    vocab_size: int = 4096
    backbone: BackboneConfig = field(default_factory=BackboneConfig)

    def validate(self) -> None:
        for name in ("n_q", "d_q", "n_t", "d_c", "downsample_factor",
                     "text_max_tokens", "fusion_layers", "fusion_heads",
                     "vocab_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"model.{name} must be >= 1")
        if self.matching_mode not in MATCHING_MODES:
            raise ConfigurationError(
                f"model.matching_mode must be one of {MATCHING_MODES}, "
                f"got {self.matching_mode!r}"
            )
        if self.matching_mode == "multi_head":
            if not self.n_t < self.n_q:
                raise ConfigurationError(
                    f"model.n_t must be < model.n_q (got n_t={self.n_t}, n_q={self.n_q})"
                )
            if not self.d_c < self.d_q:
                raise ConfigurationError(
                    f"model.d_c must be < model.d_q (got d_c={self.d_c}, d_q={self.d_q})"
                )
        if self.d_q % self.fusion_heads != 0:
            raise ConfigurationError(
                f"model.d_q ({self.d_q}) must be divisible by "
                f"model.fusion_heads ({self.fusion_heads})"
            )
        if self.downsample_factor < 2:
            raise ConfigurationError(
                "model.downsample_factor must be >= 2 (the adapter needs a strict bottleneck)"
            )
        self.backbone.validate()
