import pytest
import torch

from cirlab.errors import ConfigurationError, ContractViolation
from cirlab.model import Adapter, adapter_apply, bottleneck_width

from oracles import adapter_oracle


def make_adapter(c=8, factor=2, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return Adapter(c, factor, generator=gen)


def test_identity_when_up_projection_is_zero():
    adapter = make_adapter()
    gen = torch.Generator().manual_seed(3)
    for _ in range(50):
        x = torch.randn(8, dtype=torch.float64, generator=gen)
        assert torch.equal(adapter(x), x)


def test_fresh_adapter_is_identity():
    # W_u starts at zero, so a new adapter must not perturb the host layer
    adapter = make_adapter(seed=5)
    assert torch.count_nonzero(adapter.W_u) == 0
    x = torch.randn(8, dtype=torch.float64)
    assert torch.equal(adapter(x), x)


def test_zero_input_maps_to_zero():
    adapter = make_adapter()
    with torch.no_grad():
        adapter.W_u.normal_()
    x = torch.zeros(8, dtype=torch.float64)
    assert torch.equal(adapter(x), x)


def test_matches_straight_line_oracle():
    # c=4, c_b=2, small integer weights: frozen expected values from the oracle
    adapter = Adapter(4, 2)
    w_d = [[1.0, 0.0, -1.0, 2.0], [0.0, 1.0, 1.0, -1.0]]
    w_u = [[1.0, -1.0], [2.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]
    x = [0.5, -1.0, 2.0, 1.0]
    with torch.no_grad():
        adapter.W_d.copy_(torch.tensor(w_d, dtype=torch.float64))
        adapter.W_u.copy_(torch.tensor(w_u, dtype=torch.float64))
    expected = adapter_oracle(x, w_d, w_u)
    out = adapter(torch.tensor(x, dtype=torch.float64))
    assert out.shape == (4,)
    assert torch.allclose(out, torch.tensor(expected, dtype=torch.float64),
                          rtol=1e-12, atol=1e-12)


def test_dimension_mismatch_rejected():
    adapter = make_adapter(c=8)
    with pytest.raises(ContractViolation):
        adapter(torch.randn(5, dtype=torch.float64))


def test_strict_bottleneck_required():
    with pytest.raises(ConfigurationError):
        Adapter(1, 2)  # c_b would equal c


def test_bottleneck_width_floor():
    assert bottleneck_width(768, 16) == 48
    assert bottleneck_width(33, 16) == 2
    assert bottleneck_width(17, 100) == 1


def test_gradients_flow_through_both_projections():
    adapter = make_adapter()
    with torch.no_grad():
        adapter.W_u.normal_()
    x = torch.randn(8, dtype=torch.float64, requires_grad=True)
    adapter_apply(x, adapter).sum().backward()
    assert adapter.W_d.grad is not None and adapter.W_d.grad.abs().sum() > 0
    assert adapter.W_u.grad is not None and adapter.W_u.grad.abs().sum() > 0
    assert x.grad is not None and x.grad.abs().sum() > 0


def test_applies_tokenwise_to_batches():
    adapter = make_adapter()
    with torch.no_grad():
        adapter.W_u.normal_()
    tokens = torch.randn(5, 8, dtype=torch.float64)
    out = adapter(tokens)
    assert out.shape == (5, 8)
    for i in range(5):
        assert torch.allclose(out[i], adapter(tokens[i]))
