import pytest
import torch

from cirlab.errors import ConfigurationError, ContractViolation
from cirlab.model import (
    Adapter,
    BackboneConfig,
    StandInBackbone,
    backbone_hash,
    encode_image,
)

from conftest import toy_image


def make_backbone(seed=0, layers=2):
    return StandInBackbone(BackboneConfig(layers=layers, width=8, patch_size=4,
                                          image_size=8), seed=seed)


def test_feature_map_shape_and_finiteness():
    backbone = make_backbone()
    fm = encode_image(toy_image(0), backbone)
    assert (fm.h, fm.w, fm.d_i) == (2, 2, 8)
    assert torch.isfinite(fm.data).all()


def test_zero_adapters_match_adapter_free_output():
    backbone = make_backbone()
    adapters = [Adapter(8, 2) for _ in range(2)]  # W_u = 0 at init
    image = toy_image(1)
    plain = encode_image(image, backbone)
    adapted = encode_image(image, backbone, adapters)
    assert torch.equal(plain.data, adapted.data)


def test_empty_adapter_list_is_passthrough():
    backbone = make_backbone()
    image = toy_image(2)
    assert torch.equal(
        encode_image(image, backbone).data, encode_image(image, backbone, ()).data
    )


def test_composition_matches_manual_layering():
    # run layer -> adapter -> layer -> adapter by hand on a fixed 8x8 image
    backbone = make_backbone(seed=3)
    gen = torch.Generator().manual_seed(9)
    adapters = []
    for _ in range(2):
        adapter = Adapter(8, 2, generator=gen)
        with torch.no_grad():
            adapter.W_u.normal_(0.0, 0.5, generator=gen)
        adapters.append(adapter)
    image = toy_image(4)

    tokens = backbone.embed_patches(image)
    tokens = backbone.layer_forward(0, tokens)
    tokens = adapters[0](tokens)
    tokens = backbone.layer_forward(1, tokens)
    tokens = adapters[1](tokens)
    expected = tokens.reshape(2, 2, 8)

    actual = encode_image(image, backbone, adapters)
    assert torch.equal(actual.data, expected)


def test_adapter_count_mismatch_is_configuration_error():
    backbone = make_backbone()
    with pytest.raises(ConfigurationError):
        encode_image(toy_image(0), backbone, [Adapter(8, 2)])


def test_backbone_weights_are_frozen():
    backbone = make_backbone()
    assert all(not p.requires_grad for p in backbone.parameters())


def test_backbone_is_deterministic_per_seed():
    a, b = make_backbone(seed=5), make_backbone(seed=5)
    c = make_backbone(seed=6)
    assert backbone_hash(a) == backbone_hash(b)
    assert backbone_hash(a) != backbone_hash(c)
    image = toy_image(7)
    assert torch.equal(encode_image(image, a).data, encode_image(image, b).data)


def test_rejects_malformed_images():
    backbone = make_backbone()
    with pytest.raises(ContractViolation):
        backbone.embed_patches(torch.rand(1, 8, 8, dtype=torch.float64))
    with pytest.raises(ContractViolation):
        backbone.embed_patches(torch.rand(3, 7, 8, dtype=torch.float64))


def test_positions_disambiguate_identical_patches():
    # a uniform image still yields distinct tokens thanks to position encoding
    backbone = make_backbone()
    image = torch.full((3, 8, 8), 0.25, dtype=torch.float64)
    tokens = backbone.embed_patches(image)
    assert not torch.allclose(tokens[0], tokens[1])
