import pytest
import torch

from cirlab.model import CirModel, encode_image, mix, multi_head_similarity

from conftest import toy_image, toy_model_config


def test_score_composition_equals_manual_pipeline(toy_model, ref_image, cand_image):
    model = toy_model
    text = "change the top to teal"
    score = model.score(ref_image, text, cand_image)

    ref_fm = encode_image(ref_image, model.backbone, model.active_adapters())
    cand_fm = encode_image(cand_image, model.backbone, model.active_adapters())
    query = mix(model.fusion.fuse_query(ref_fm, text), model.mixer)
    candidate = mix(model.fusion.encode_candidate(cand_fm), model.mixer)
    manual = multi_head_similarity(query, candidate)
    assert torch.equal(score, manual)


def test_score_is_bounded_by_head_count(toy_model):
    n_t = toy_model.config.n_t
    for seed in range(50):
        a, b = toy_image(seed), toy_image(seed + 500)
        s = toy_model.score(a, "swap colors", b).item()
        assert abs(s) <= n_t


def test_global_mean_self_score_is_one(ref_image):
    config = toy_model_config(matching_mode="global_mean")
    model = CirModel.build(config, seed=1)
    assert model.mixer is None
    rep_q = model.embed_candidate(ref_image)
    assert rep_q.shape == (config.d_q,)
    # candidate embeddings equal to query embeddings give unit cosine
    assert model.similarity(rep_q, rep_q.clone()).item() == 1.0


def test_mixer_is_shared_between_branches(toy_model, ref_image, cand_image):
    model = toy_model
    groups = model.parameter_groups()
    assert groups["mixer"] is model.mixer

    text = "brighter pattern"
    before_q = model.embed_query(ref_image, text)
    before_c = model.embed_candidate(cand_image)
    with torch.no_grad():
        model.mixer.W_tm.add_(0.1)
    after_q = model.embed_query(ref_image, text)
    after_c = model.embed_candidate(cand_image)
    # one write is visible through both branches
    assert not torch.allclose(before_q, after_q)
    assert not torch.allclose(before_c, after_c)


def test_argmax_invariant_to_per_head_rescaling(toy_model, ref_image):
    model = toy_model
    query = model.embed_query(ref_image, "add buttons").detach()
    candidates = [model.embed_candidate(toy_image(s + 100)).detach() for s in range(12)]
    scores = [model.similarity(query, c).item() for c in candidates]
    best = max(range(12), key=lambda i: scores[i])

    scales = torch.tensor([2.0, 0.25, 9.0], dtype=torch.float64).unsqueeze(1)
    rescaled = [model.similarity(query, c * scales).item() for c in candidates]
    best_rescaled = max(range(12), key=lambda i: rescaled[i])
    assert best == best_rescaled
    for s, r in zip(scores, rescaled):
        assert r == pytest.approx(s, rel=1e-6)


def _relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    denom = torch.maximum(
        torch.maximum(analytic.abs(), numeric.abs()),
        torch.tensor(1e-8, dtype=torch.float64),
    )
    return float(((analytic - numeric).abs() / denom).max())


def central_difference_gradients(model, param, score_fn, step=1e-5):
    grad = torch.zeros_like(param)
    flat = param.data.view(-1)
    grad_flat = grad.view(-1)
    for i in range(flat.numel()):
        original = flat[i].item()
        with torch.no_grad():
            flat[i] = original + step
        plus = score_fn().item()
        with torch.no_grad():
            flat[i] = original - step
        minus = score_fn().item()
        with torch.no_grad():
            flat[i] = original
        grad_flat[i] = (plus - minus) / (2 * step)
    return grad


def test_score_gradients_match_finite_differences(ref_image, cand_image):
    model = CirModel.build(toy_model_config(), seed=13)
    # give the adapters non-trivial weights so both projections get signal
    gen = torch.Generator().manual_seed(4)
    with torch.no_grad():
        for adapter in model.adapters:
            adapter.W_d.normal_(0.0, 0.05, generator=gen)
            adapter.W_u.normal_(0.0, 0.05, generator=gen)

    text = "make the top crimson"
    score_fn = lambda: model.score(ref_image, text, cand_image)

    model.zero_grad()
    score_fn().backward()

    checked = {
        "W_tm": model.mixer.W_tm,
        "W_cm": model.mixer.W_cm,
        "W_d": model.adapters[0].W_d,
        "W_u": model.adapters[0].W_u,
    }
    for name, param in checked.items():
        numeric = central_difference_gradients(model, param, score_fn)
        assert param.grad is not None, name
        err = _relative_error(param.grad, numeric)
        assert err < 1e-4, f"{name}: relative error {err}"
