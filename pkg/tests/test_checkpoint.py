import pytest
import torch

from cirlab.errors import CheckpointError
from cirlab.model import CirModel, load_into, load_model, save_checkpoint

from conftest import toy_image, toy_model_config


def randomize(model, seed=0):
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, module in model.parameter_groups().items():
            if name == "backbone":
                continue
            for p in module.parameters():
                p.add_(0.05 * torch.randn(p.shape, dtype=p.dtype, generator=gen))


def test_round_trip_restores_behaviour(tmp_path):
    model = CirModel.build(toy_model_config(), seed=21)
    randomize(model, seed=2)
    image = toy_image(0)
    score_before = model.score(image, "shorter hem", toy_image(1)).item()
    path = save_checkpoint(model, tmp_path / "ckpt.pt")

    restored = load_model(path)
    assert restored.fingerprint() == model.fingerprint()
    assert restored.score(image, "shorter hem", toy_image(1)).item() == score_before


def test_load_into_requires_matching_config(tmp_path):
    model = CirModel.build(toy_model_config(), seed=21)
    path = save_checkpoint(model, tmp_path / "ckpt.pt")
    other = CirModel.build(toy_model_config(n_t=2), seed=21)
    with pytest.raises(CheckpointError, match="config"):
        load_into(path, other)


def test_load_into_requires_matching_backbone(tmp_path):
    model = CirModel.build(toy_model_config(), seed=21)
    path = save_checkpoint(model, tmp_path / "ckpt.pt")
    different_backbone = CirModel.build(toy_model_config(), seed=22)
    with pytest.raises(CheckpointError, match="backbone"):
        load_into(path, different_backbone)


def test_missing_file_is_reported(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        load_model(tmp_path / "absent.pt")


def test_fingerprint_tracks_parameters():
    model = CirModel.build(toy_model_config(), seed=21)
    before = model.fingerprint()
    assert before == model.fingerprint()
    with torch.no_grad():
        model.mixer.W_tm.add_(1.0)
    assert model.fingerprint() != before


def test_backbone_stored_by_reference_not_weights(tmp_path):
    model = CirModel.build(toy_model_config(), seed=21)
    path = save_checkpoint(model, tmp_path / "ckpt.pt")
    payload = torch.load(path, weights_only=False)
    assert "backbone" not in payload["groups"]
    assert isinstance(payload["backbone_hash"], str)
    assert payload["backbone_seed"] == model.backbone_seed
