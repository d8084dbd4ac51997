import pytest
import torch

from cirlab.errors import ContractViolation
from cirlab.model import CirModel, encode_image

from conftest import toy_image, toy_model_config


@pytest.fixture
def model():
    return CirModel.build(toy_model_config(), seed=3)


def feature_map(model, seed=0):
    return encode_image(toy_image(seed), model.backbone, model.active_adapters())


def test_fused_query_shape(model):
    out = model.fusion.fuse_query(feature_map(model), "make the dress red")
    assert out.shape == (6, 8)


def test_candidate_shape(model):
    out = model.fusion.encode_candidate(feature_map(model))
    assert out.shape == (6, 8)


def test_different_texts_give_different_embeddings(model):
    fm = feature_map(model)
    a = model.fusion.fuse_query(fm, "longer sleeves in red")
    b = model.fusion.fuse_query(fm, "shorter hem in blue")
    assert not torch.allclose(a, b)


def test_empty_text_rejected(model):
    fm = feature_map(model)
    for bad in ("", "   ", "!!!"):
        with pytest.raises(ContractViolation):
            model.fusion.fuse_query(fm, bad)


def test_text_is_truncated_to_max_tokens(model):
    fm = feature_map(model)
    base = " ".join(f"word{i}" for i in range(model.config.text_max_tokens))
    extended = base + " trailing tokens beyond the limit"
    assert torch.equal(
        model.fusion.fuse_query(fm, base), model.fusion.fuse_query(fm, extended)
    )


def test_candidate_equals_no_text_path(model):
    fm = feature_map(model)
    assert torch.equal(model.fusion.encode_candidate(fm), model.fusion._fuse(fm, None))


def test_caption_encoding_ignores_images(model):
    out = model.fusion.encode_text("a red dress with short sleeves")
    assert out.shape == (6, 8)
    with pytest.raises(ContractViolation):
        model.fusion.encode_text("  ")


def test_no_candidate_collisions_over_random_pairs(model):
    # distinct feature maps must map to distinct embeddings
    outputs = []
    for seed in range(100):
        fm = feature_map(model, seed=seed)
        outputs.append(model.fusion.encode_candidate(fm))
    for i in range(0, 100, 7):
        for j in range(i + 1, 100, 13):
            assert not torch.allclose(outputs[i], outputs[j])


def test_determinism(model):
    fm = feature_map(model, seed=5)
    a = model.fusion.fuse_query(fm, "swap the collar")
    b = model.fusion.fuse_query(fm, "swap the collar")
    assert torch.equal(a, b)


def test_gradient_flows_from_image_features(model):
    # finite-difference probe: perturbing one feature entry moves the output
    image = toy_image(9)
    fm = encode_image(image, model.backbone, model.active_adapters())
    base = model.fusion.fuse_query(fm, "add stripes")

    perturbed = fm.data.clone()
    perturbed[0, 0, 0] += 1e-3
    from cirlab.model.backbone import ImageFeatureMap

    moved = model.fusion.fuse_query(ImageFeatureMap(perturbed), "add stripes")
    assert (moved - base).abs().max() > 0
