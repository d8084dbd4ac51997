"""Image encoder interface, a deterministic stand-in, and adapter insertion.

The encoder contract is deliberately small: a backbone exposes a patch
embedding plus an ordered list of layers of one shared width, so that
adapters can be hooked in after each layer's output. The stand-in backbone
is a frozen, seeded patch-embed + MLP-block stack, sized for tests; any
pretrained encoder can be used instead by conforming to the same protocol.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import torch
from torch import nn

from ..errors import ConfigurationError, ContractViolation
from ..seeding import torch_generator
from .adapters import Adapter
from .config import BackboneConfig


@dataclass(frozen=True)
class ImageFeatureMap:
    """Spatial grid of feature vectors produced by an image encoder."""

    data: torch.Tensor  # (h, w, d_I)

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ContractViolation(
                f"feature map must be h x w x d_I, got shape {tuple(self.data.shape)}"
            )
        if not torch.isfinite(self.data).all():
            raise ContractViolation("feature map contains non-finite entries")

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def d_i(self) -> int:
        return self.data.shape[2]

    def tokens(self) -> torch.Tensor:
        """Flatten to ``(h * w, d_I)``."""
        return self.data.reshape(-1, self.data.shape[-1])


@runtime_checkable
class ImageBackbone(Protocol):
    """What an image encoder must expose for adapter insertion."""

    @property
    def num_layers(self) -> int: ...

    @property
    def layer_width(self) -> int: ...

    def embed_patches(self, image: torch.Tensor) -> torch.Tensor:
        """Image ``(3, H, W)`` to tokens ``(n_tokens, width)``."""
        ...

    def layer_forward(self, index: int, tokens: torch.Tensor) -> torch.Tensor: ...

    def grid_shape(self, image: torch.Tensor) -> tuple[int, int]: ...


def sinusoidal_positions(n: int, dim: int) -> torch.Tensor:
    """Fixed sinusoidal position table ``(n, dim)`` in float64."""
    pos = torch.arange(n, dtype=torch.float64).unsqueeze(1)
    idx = torch.arange(dim, dtype=torch.float64).unsqueeze(0)
    angle = pos / torch.pow(10000.0, (2 * torch.div(idx, 2, rounding_mode="floor")) / dim)
    table = torch.where(idx % 2 == 0, torch.sin(angle), torch.cos(angle))
    return table


class _MlpBlock(nn.Module):
    def __init__(self, width: int, generator: torch.Generator):
        super().__init__()
        self.norm = nn.LayerNorm(width, dtype=torch.float64)
        self.fc1 = nn.Linear(width, 2 * width, dtype=torch.float64)
        self.fc2 = nn.Linear(2 * width, width, dtype=torch.float64)
        self.act = nn.GELU()
        for lin in (self.fc1, self.fc2):
            bound = 1.0 / math.sqrt(lin.in_features)
            lin.weight.data.uniform_(-bound, bound, generator=generator)
            lin.bias.data.uniform_(-bound, bound, generator=generator)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        return tokens + self.fc2(self.act(self.fc1(self.norm(tokens))))


class StandInBackbone(nn.Module):
    """Small frozen encoder: seeded patch embedding + MLP-block stack.

    Weights are fixed at construction (``requires_grad=False``) and never
    change under training; domain adaptation happens only through adapters
    layered on top.
    """

    def __init__(self, config: BackboneConfig | None = None, seed: int = 0):
        super().__init__()
        self.config = config or BackboneConfig()
        self.config.validate()
        self.seed = seed
        gen = torch_generator(seed, "backbone-init")
        width = self.config.width
        patch = self.config.patch_size
        w = torch.empty(width, 3 * patch * patch, dtype=torch.float64)
        w.normal_(0.0, 1.0 / math.sqrt(3 * patch * patch), generator=gen)
        self.patch_proj = nn.Parameter(w)
        self.blocks = nn.ModuleList(
            _MlpBlock(width, gen) for _ in range(self.config.layers)
        )
        for p in self.parameters():
            p.requires_grad_(False)

    @property
    def num_layers(self) -> int:
        return self.config.layers

    @property
    def layer_width(self) -> int:
        return self.config.width

    def grid_shape(self, image: torch.Tensor) -> tuple[int, int]:
        patch = self.config.patch_size
        return image.shape[1] // patch, image.shape[2] // patch

    def embed_patches(self, image: torch.Tensor) -> torch.Tensor:
        if image.ndim != 3 or image.shape[0] != 3:
            raise ContractViolation(
                f"expected a (3, H, W) image, got shape {tuple(image.shape)}"
            )
        patch = self.config.patch_size
        if image.shape[1] % patch or image.shape[2] % patch:
            raise ContractViolation(
                f"image sides must be multiples of patch size {patch}, "
                f"got {tuple(image.shape[1:])}"
            )
        image = image.to(torch.float64)
        h, w = self.grid_shape(image)
        # (3, H, W) -> (h*w, 3*patch*patch), row-major over the patch grid
        patches = (
            image.reshape(3, h, patch, w, patch)
            .permute(1, 3, 0, 2, 4)
            .reshape(h * w, -1)
        )
        tokens = patches @ self.patch_proj.T
        return tokens + sinusoidal_positions(tokens.shape[0], tokens.shape[1])

    def layer_forward(self, index: int, tokens: torch.Tensor) -> torch.Tensor:
        return self.blocks[index](tokens)

    def state_hash(self) -> str:
        """Content hash identifying these frozen weights."""
        return backbone_hash(self)


def backbone_hash(backbone: nn.Module) -> str:
    hasher = hashlib.sha256()
    for name, tensor in sorted(backbone.state_dict().items()):
        hasher.update(name.encode("utf-8"))
        hasher.update(tensor.detach().cpu().numpy().tobytes())
    return hasher.hexdigest()


def encode_image(
    image: torch.Tensor,
    backbone: ImageBackbone,
    adapters: Sequence[Adapter] = (),
) -> ImageFeatureMap:
    """Run the backbone, applying one adapter after each layer's output.

    ``adapters`` must be empty (adapter-free pass) or exactly one per
    backbone layer. Backbone weights are read-only here; only adapter
    parameters participate in autograd.
    """
    if adapters and len(adapters) != backbone.num_layers:
        raise ConfigurationError(
            f"got {len(adapters)} adapters for a backbone with "
            f"{backbone.num_layers} layers"
        )
    tokens = backbone.embed_patches(image)
    for i in range(backbone.num_layers):
        tokens = backbone.layer_forward(i, tokens)
        if adapters:
            tokens = adapters[i](tokens)
    h, w = backbone.grid_shape(image)
    return ImageFeatureMap(tokens.reshape(h, w, -1))
