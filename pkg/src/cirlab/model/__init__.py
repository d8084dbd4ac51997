"""Retrieval model: encoding, fusion, mixing, matching, checkpoints."""

from .adapters import Adapter, adapter_apply, bottleneck_width
from .backbone import (
    ImageBackbone,
    ImageFeatureMap,
    StandInBackbone,
    backbone_hash,
    encode_image,
)
from .checkpoint import load_into, load_model, save_checkpoint
from .config import BackboneConfig, ModelConfig
from .fusion import QueryFusion
from .matching import global_cosine, multi_head_similarity, row_cosines
from .mixer import Mixer, mix
from .network import CirModel

__all__ = [
    "Adapter",
    "BackboneConfig",
    "CirModel",
    "ImageBackbone",
    "ImageFeatureMap",
    "Mixer",
    "ModelConfig",
    "QueryFusion",
    "StandInBackbone",
    "adapter_apply",
    "backbone_hash",
    "bottleneck_width",
    "encode_image",
    "global_cosine",
    "load_into",
    "load_model",
    "mix",
    "multi_head_similarity",
    "row_cosines",
    "save_checkpoint",
]
