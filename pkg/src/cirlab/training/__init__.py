"""Contrastive training: losses, batching, and the two-stage loop."""

from .data import TripletBatch, TripletDataset, load_image
from .losses import cir_loss, contrastive_loss, ctr_loss
from .loop import STAGE1, STAGE2, StageConfig, TrainResult, stage_defaults, train_stage

__all__ = [
    "STAGE1",
    "STAGE2",
    "StageConfig",
    "TrainResult",
    "TripletBatch",
    "TripletDataset",
    "cir_loss",
    "contrastive_loss",
    "ctr_loss",
    "load_image",
    "stage_defaults",
    "train_stage",
]
