"""The composed-retrieval model: frozen backbone, adapters, fusion, mixer.

Forward paths are pure given fixed weights; there is no hidden mutable
state, so inference may run concurrently across inputs. Parameter mutation
(training) must be serialized by the caller.
"""

import hashlib

import torch
from torch import nn

from ..errors import ConfigurationError
from ..seeding import substream, torch_generator
from .adapters import Adapter
from .backbone import ImageFeatureMap, StandInBackbone, backbone_hash, encode_image
from .config import ModelConfig
from .fusion import QueryFusion
from .matching import global_cosine, multi_head_similarity
from .mixer import Mixer


class CirModel(nn.Module):
    """Composes encoding, fusion, mixing, and matching into one scorer."""

    def __init__(
        self,
        config: ModelConfig,
        backbone: StandInBackbone,
        adapters: nn.ModuleList | None,
        fusion: QueryFusion,
        mixer: Mixer | None,
        backbone_seed: int = 0,
    ):
        super().__init__()
        config.validate()
        self.config = config
        self.backbone = backbone
        self.adapters = adapters
        self.fusion = fusion
        self.mixer = mixer
        self.backbone_seed = backbone_seed
        if config.adapters_enabled and (adapters is None or len(adapters) != backbone.num_layers):
            raise ConfigurationError(
                "adapters_enabled requires one adapter per backbone layer"
            )
        if config.matching_mode == "multi_head" and mixer is None:
            raise ConfigurationError("multi_head matching requires a mixer")

    @classmethod
    def build(cls, config: ModelConfig, seed: int = 0) -> "CirModel":
        """Deterministically construct a model from a config and seed."""
        config.validate()
        backbone_seed = substream(seed, "backbone")
        backbone = StandInBackbone(config.backbone, seed=backbone_seed)
        adapters = None
        if config.adapters_enabled:
            gen = torch_generator(seed, "adapter-init")
            adapters = nn.ModuleList(
                Adapter(backbone.layer_width, config.downsample_factor, generator=gen)
                for _ in range(backbone.num_layers)
            )
        torch.manual_seed(substream(seed, "fusion-init"))
        fusion = QueryFusion(config, d_image=backbone.layer_width)
        mixer = None
        if config.matching_mode == "multi_head":
            mixer = Mixer(
                config.n_q, config.d_q, config.n_t, config.d_c,
                generator=torch_generator(seed, "mixer-init"),
            )
        return cls(config, backbone, adapters, fusion, mixer, backbone_seed=backbone_seed)

    # ---- encoding ----------------------------------------------------

    def active_adapters(self) -> tuple[Adapter, ...]:
        if self.config.adapters_enabled and self.adapters is not None:
            return tuple(self.adapters)
        return ()

    def encode_feature_map(self, image: torch.Tensor) -> ImageFeatureMap:
        return encode_image(image, self.backbone, self.active_adapters())

    def _reduce(self, tokens: torch.Tensor) -> torch.Tensor:
        """Map ``(n_q, d_q)`` fusion output to the matching representation."""
        if self.config.matching_mode == "multi_head":
            return self.mixer(tokens)
        return tokens.mean(dim=0)

    def embed_query(self, image: torch.Tensor, text: str) -> torch.Tensor:
        """Reference image + modification text -> matching representation."""
        feature_map = self.encode_feature_map(image)
        return self._reduce(self.fusion.fuse_query(feature_map, text))

    def embed_candidate(self, image: torch.Tensor) -> torch.Tensor:
        """Candidate image -> matching representation (no text branch)."""
        feature_map = self.encode_feature_map(image)
        return self._reduce(self.fusion.encode_candidate(feature_map))

    def embed_caption(self, text: str) -> torch.Tensor:
        """Caption -> matching representation through the text pathway."""
        return self._reduce(self.fusion.encode_text(text))

    # ---- scoring -----------------------------------------------------

    def similarity(self, query_rep: torch.Tensor, candidate_rep: torch.Tensor) -> torch.Tensor:
        if self.config.matching_mode == "multi_head":
            return multi_head_similarity(query_rep, candidate_rep)
        return global_cosine(query_rep, candidate_rep)

    def score(self, reference_image: torch.Tensor, modification_text: str,
              candidate_image: torch.Tensor) -> torch.Tensor:
        """Similarity between a composed query and one candidate image."""
        return self.similarity(
            self.embed_query(reference_image, modification_text),
            self.embed_candidate(candidate_image),
        )

    # ---- parameter bookkeeping ----------------------------------------

    def parameter_groups(self) -> dict[str, nn.Module]:
        """Named parameter groups for freezing and checkpointing."""
        groups: dict[str, nn.Module] = {"backbone": self.backbone, "fusion": self.fusion}
        if self.adapters is not None:
            groups["adapters"] = self.adapters
        if self.mixer is not None:
            groups["mixer"] = self.mixer
        return groups

    def trainable_group_names(self) -> tuple[str, ...]:
        return tuple(name for name in self.parameter_groups() if name != "backbone")

    def fingerprint(self) -> str:
        """Content hash over config and every parameter group."""
        hasher = hashlib.sha256()
        hasher.update(repr(self.config).encode("utf-8"))
        hasher.update(backbone_hash(self.backbone).encode("ascii"))
        for group_name in sorted(self.trainable_group_names()):
            module = self.parameter_groups()[group_name]
            for name, tensor in sorted(module.state_dict().items()):
                hasher.update(f"{group_name}.{name}".encode("utf-8"))
                hasher.update(tensor.detach().cpu().numpy().tobytes())
        return hasher.hexdigest()
