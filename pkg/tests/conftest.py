import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from cirlab.model import BackboneConfig, CirModel, ModelConfig


def toy_model_config(**overrides) -> ModelConfig:
    """The small configuration used for gradient checks and fast tests."""
    defaults = dict(
        n_q=6,
        d_q=8,
        n_t=3,
        d_c=4,
        downsample_factor=2,
        text_max_tokens=16,
        fusion_heads=2,
        fusion_layers=1,
        vocab_size=64,
        backbone=BackboneConfig(layers=2, width=8, patch_size=4, image_size=8),
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)


@pytest.fixture
def toy_config() -> ModelConfig:
    return toy_model_config()


@pytest.fixture
def toy_model(toy_config) -> CirModel:
    return CirModel.build(toy_config, seed=7)


def toy_image(seed: int = 0, size: int = 8) -> torch.Tensor:
    gen = torch.Generator().manual_seed(seed)
    return torch.rand(3, size, size, dtype=torch.float64, generator=gen)


@pytest.fixture
def ref_image() -> torch.Tensor:
    return toy_image(1)


@pytest.fixture
def cand_image() -> torch.Tensor:
    return toy_image(2)
