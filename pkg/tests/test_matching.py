import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from cirlab.errors import ContractViolation
from cirlab.model import global_cosine, multi_head_similarity

from oracles import cosine_sum_oracle


def rand(shape, seed):
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, dtype=torch.float64, generator=gen)


def test_self_similarity_is_exactly_head_count():
    for seed in range(20):
        a = rand((12, 256), seed)
        assert multi_head_similarity(a, a).item() == 12.0
        b = a.clone()
        assert multi_head_similarity(a, b).item() == 12.0


def test_antipodal_is_exactly_negative_head_count():
    for seed in range(10):
        a = rand((12, 256), seed)
        assert multi_head_similarity(a, -a).item() == -12.0


def test_matches_per_head_cosine_oracle_small():
    # n_t=3, d_c=2 fixed matrices; value frozen from the oracle
    a = torch.tensor([[1.0, 0.0], [1.0, 1.0], [-2.0, 1.0]], dtype=torch.float64)
    b = torch.tensor([[0.0, 3.0], [2.0, 2.0], [1.0, 1.0]], dtype=torch.float64)
    expected = cosine_sum_oracle(a.tolist(), b.tolist())
    assert expected == pytest.approx(0.683772233983162, abs=1e-12)
    got = multi_head_similarity(a, b).item()
    assert got == pytest.approx(expected, rel=1e-12)


def test_matches_oracle_on_random_pairs():
    for seed in range(100):
        a, b = rand((12, 256), 2 * seed), rand((12, 256), 2 * seed + 1)
        expected = cosine_sum_oracle(a.tolist(), b.tolist())
        assert multi_head_similarity(a, b).item() == pytest.approx(expected, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_bounded_and_symmetric(seed):
    a, b = rand((12, 256), seed), rand((12, 256), seed + 1_000_000)
    s_ab = multi_head_similarity(a, b).item()
    s_ba = multi_head_similarity(b, a).item()
    assert abs(s_ab) <= 12.0
    assert s_ab == s_ba


def test_zero_rows_contribute_zero_not_nan():
    a = rand((4, 8), 0)
    a[2] = 0.0
    b = rand((4, 8), 1)
    value = multi_head_similarity(a, b)
    assert torch.isfinite(value)
    mask = torch.ones(4, dtype=torch.bool)
    mask[2] = False
    expected = cosine_sum_oracle(a[mask].tolist(), b[mask].tolist())
    assert value.item() == pytest.approx(expected, rel=1e-9)
    both_zero = torch.zeros(4, 8, dtype=torch.float64)
    assert multi_head_similarity(both_zero, both_zero).item() == 0.0


def test_per_head_positive_scaling_invariance():
    a, b = rand((12, 16), 3), rand((12, 16), 4)
    base = multi_head_similarity(a, b).item()
    scales = torch.tensor([0.5, 2.0, 7.5, 1e-3] * 3, dtype=torch.float64)
    scaled = multi_head_similarity(a * scales.unsqueeze(1), b).item()
    assert scaled == pytest.approx(base, rel=1e-6)


def test_shape_mismatch_rejected():
    with pytest.raises(ContractViolation):
        multi_head_similarity(rand((3, 4), 0), rand((4, 4), 1))
    with pytest.raises(ContractViolation):
        multi_head_similarity(rand((3, 4), 0), rand((3, 5), 1))


def test_global_cosine_unit_self_similarity():
    v = rand((16,), 5)
    assert global_cosine(v, v).item() == 1.0
    assert global_cosine(v, -v).item() == -1.0
    with pytest.raises(ContractViolation):
        global_cosine(v, rand((8,), 6))
