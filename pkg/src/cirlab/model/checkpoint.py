"""Checkpoint archive: trainable groups by name, frozen backbone by hash.

The backbone's weights are not serialized; the archive records the seed
that rebuilds the stand-in deterministically plus a content hash that
loading verifies, alongside the full model config (compared field by
field) and the state dicts of the trainable groups.
"""

from pathlib import Path

import torch

from .. import structconf
from ..errors import CheckpointError
from .backbone import backbone_hash
from .config import ModelConfig
from .network import CirModel

FORMAT_VERSION = 1


def save_checkpoint(model: CirModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    groups = model.parameter_groups()
    payload = {
        "format_version": FORMAT_VERSION,
        "config": structconf.to_dict(model.config),
        "backbone_seed": model.backbone_seed,
        "backbone_hash": backbone_hash(model.backbone),
        "groups": {
            name: groups[name].state_dict() for name in model.trainable_group_names()
        },
    }
    torch.save(payload, path)
    return path


def _read(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    payload = torch.load(path, weights_only=False)
    if payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format {payload.get('format_version')!r}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    return payload


def load_into(path: str | Path, model: CirModel) -> CirModel:
    """Restore trainable groups into an existing, config-matching model."""
    payload = _read(path)
    stored_config = structconf.from_dict(ModelConfig, payload["config"])
    if stored_config != model.config:
        raise CheckpointError(
            "checkpoint config does not match the model config; "
            f"stored={stored_config} current={model.config}"
        )
    if payload["backbone_hash"] != backbone_hash(model.backbone):
        raise CheckpointError(
            "checkpoint references a different frozen backbone "
            "(hash mismatch); rebuild the model with the checkpoint's seed"
        )
    groups = model.parameter_groups()
    for name, state in payload["groups"].items():
        if name not in groups:
            raise CheckpointError(f"checkpoint has unknown parameter group {name!r}")
        current = groups[name].state_dict()
        for key, tensor in state.items():
            if key not in current:
                raise CheckpointError(f"unexpected tensor {name}.{key} in checkpoint")
            if current[key].shape != tensor.shape:
                raise CheckpointError(
                    f"shape mismatch for {name}.{key}: checkpoint "
                    f"{tuple(tensor.shape)} vs model {tuple(current[key].shape)}"
                )
        groups[name].load_state_dict(state)
    return model


def load_model(path: str | Path) -> CirModel:
    """Rebuild a model entirely from a checkpoint archive."""
    payload = _read(path)
    config = structconf.from_dict(ModelConfig, payload["config"])
    model = CirModel.build(config, seed=0)
    # the stand-in backbone is defined by its own seed, not the build seed
    from .backbone import StandInBackbone

    model.backbone = StandInBackbone(config.backbone, seed=payload["backbone_seed"])
    model.backbone_seed = payload["backbone_seed"]
    return load_into(path, model)
