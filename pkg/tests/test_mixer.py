import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from cirlab.errors import ConfigurationError, ContractViolation
from cirlab.model import Mixer, mix

from oracles import mix_oracle


def make_mixer(n_q=6, d_q=8, n_t=3, d_c=4, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return Mixer(n_q, d_q, n_t, d_c, generator=gen)


def test_zero_input_gives_zero_output():
    mixer = make_mixer()
    out = mixer(torch.zeros(6, 8, dtype=torch.float64))
    assert out.shape == (3, 4)
    assert torch.equal(out, torch.zeros(3, 4, dtype=torch.float64))


def test_matches_hand_multiplied_oracle():
    # n_q=3, d_q=3 -> n_t=2, d_c=2 with small integer matrices
    mixer = Mixer(3, 3, 2, 2)
    w_tm = [[1.0, 0.0, 2.0], [0.0, -1.0, 1.0]]
    w_cm = [[1.0, -1.0], [2.0, 0.0], [0.0, 1.0]]
    x = [[1.0, 2.0, 0.0], [0.0, 1.0, -1.0], [3.0, 0.0, 1.0]]
    with torch.no_grad():
        mixer.W_tm.copy_(torch.tensor(w_tm, dtype=torch.float64))
        mixer.W_cm.copy_(torch.tensor(w_cm, dtype=torch.float64))
    expected = torch.tensor(mix_oracle(x, w_tm, w_cm), dtype=torch.float64)
    out = mix(torch.tensor(x, dtype=torch.float64), mixer)
    assert torch.equal(out, expected)


def test_token_mixing_applies_before_channel_mixing():
    mixer = make_mixer()
    x = torch.randn(6, 8, dtype=torch.float64)
    expected = (mixer.W_tm @ x) @ mixer.W_cm
    assert torch.allclose(mixer(x), expected, rtol=1e-12, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_linearity(seed):
    mixer = make_mixer()
    gen = torch.Generator().manual_seed(seed)
    a = torch.randn(6, 8, dtype=torch.float64, generator=gen)
    b = torch.randn(6, 8, dtype=torch.float64, generator=gen)
    additive = mixer(a + b)
    split = mixer(a) + mixer(b)
    assert torch.allclose(additive, split, rtol=1e-6, atol=1e-9)
    scale = float(torch.rand(1, generator=gen) * 5 + 0.1)
    assert torch.allclose(mixer(scale * a), scale * mixer(a), rtol=1e-6, atol=1e-9)


def test_shape_mismatch_rejected():
    mixer = make_mixer()
    with pytest.raises(ContractViolation):
        mixer(torch.randn(5, 8, dtype=torch.float64))
    with pytest.raises(ContractViolation):
        mixer(torch.randn(6, 9, dtype=torch.float64))


def test_reduction_invariants_enforced():
    with pytest.raises(ConfigurationError):
        Mixer(6, 8, 6, 4)  # n_t not < n_q
    with pytest.raises(ConfigurationError):
        Mixer(6, 8, 3, 8)  # d_c not < d_q
