"""Contrastive / LM loss against exact-summation and hand-derived oracles."""

import math
import random

import mpmath
import numpy as np
import pytest

from waffle.errors import DimensionMismatch, EmptyList, NonFinite, ZeroVector
from waffle.loss import (
    GroupBatch,
    SamplePair,
    batch_from_obj,
    combined_loss,
    contrastive_grad,
    contrastive_loss,
    lm_loss,
    loss_report,
    mean_embeddings,
)


def make_sample(patches, tokens, logprobs=None):
    if logprobs is None:
        logprobs = [0.0] * len(tokens)
    return SamplePair(
        patch_embeddings=patches, token_embeddings=tokens, token_logprobs=logprobs
    )


def random_batch(rng, k=3, d=4, lam=0.1):
    samples = []
    for _ in range(k):
        m, n = rng.randint(1, 5), rng.randint(1, 5)
        samples.append(
            make_sample(
                [[rng.uniform(-2, 2) for _ in range(d)] for _ in range(m)],
                [[rng.uniform(-2, 2) for _ in range(d)] for _ in range(n)],
                [rng.uniform(-3, 0) for _ in range(n)],
            )
        )
    return GroupBatch(samples=tuple(samples), lam=lam)


# ---------------------------------------------------------------------------
# mean_embeddings
# ---------------------------------------------------------------------------


def test_mean_of_two_patches():
    v_bar, t_bar = mean_embeddings(make_sample([[1.0, 0.0], [0.0, 1.0]], [[3.0, 4.0]]))
    assert v_bar.tolist() == [0.5, 0.5]
    assert t_bar.tolist() == [3.0, 4.0]


def test_mean_matches_exact_summation_oracle():
    rng = random.Random(2)
    vectors = [[rng.uniform(-1, 1) for _ in range(3)] for _ in range(100)]
    sample = make_sample(vectors, [[1.0, 1.0, 1.0]])
    v_bar, _ = mean_embeddings(sample)
    with mpmath.workdps(60):
        exact = [
            float(mpmath.fsum(mpmath.mpf(repr(v[d])) for v in vectors) / 100)
            for d in range(3)
        ]
    assert np.allclose(v_bar, exact, rtol=0, atol=1e-12)


def test_empty_lists_rejected():
    with pytest.raises(EmptyList):
        make_sample([], [[1.0]])
    with pytest.raises(EmptyList):
        make_sample([[1.0]], [])


# ---------------------------------------------------------------------------
# contrastive_loss
# ---------------------------------------------------------------------------


def test_k1_is_minus_one():
    batch = GroupBatch(samples=(make_sample([[0.3, 0.7]], [[5.0, 1.0]]),))
    assert contrastive_loss(batch) == -1.0


def test_uniform_similarities_give_minus_one():
    # all means identical -> every sim equal -> each softmax row is uniform
    sample = make_sample([[1.0, 1.0]], [[2.0, 2.0]])
    batch = GroupBatch(samples=(sample, sample, sample))
    assert contrastive_loss(batch) == pytest.approx(-1.0, abs=1e-12)


def test_orthogonal_k2_value():
    batch = GroupBatch(
        samples=(
            make_sample([[1.0, 0.0]], [[1.0, 0.0]]),
            make_sample([[0.0, 1.0]], [[0.0, 1.0]]),
        )
    )
    with mpmath.workdps(50):
        expected = float(-2 * mpmath.e / (mpmath.e + 1))
    assert contrastive_loss(batch) == pytest.approx(expected, abs=1e-9)
    assert contrastive_loss(batch) == pytest.approx(-1.462117157260, abs=1e-9)


def test_log_variant_matches_infonce():
    rng = random.Random(5)
    batch = random_batch(rng)
    v = contrastive_loss(batch, log_variant=True)
    # recompute from scratch
    import numpy.linalg as la

    t = np.stack([s.token_embeddings.mean(0) for s in batch.samples])
    p = np.stack([s.patch_embeddings.mean(0) for s in batch.samples])
    sim = (t / la.norm(t, axis=1, keepdims=True)) @ (p / la.norm(p, axis=1, keepdims=True)).T
    soft = np.exp(sim) / np.exp(sim).sum(axis=1, keepdims=True)
    assert v == pytest.approx(-np.log(np.diag(soft)).sum(), rel=1e-12)


def test_zero_vector_rejected():
    batch = GroupBatch(samples=(make_sample([[0.0, 0.0]], [[1.0, 0.0]]),))
    with pytest.raises(ZeroVector):
        contrastive_loss(batch)


def test_permutation_invariance():
    rng = random.Random(11)
    batch = random_batch(rng, k=4)
    perm = list(range(4))
    rng.shuffle(perm)
    shuffled = GroupBatch(samples=tuple(batch.samples[i] for i in perm), lam=batch.lam)
    assert contrastive_loss(shuffled) == pytest.approx(contrastive_loss(batch), rel=1e-12)
    assert lm_loss(shuffled) == pytest.approx(lm_loss(batch), rel=1e-12)
    assert combined_loss(shuffled) == pytest.approx(combined_loss(batch), rel=1e-12)


def test_scale_invariance_of_cosine():
    rng = random.Random(13)
    batch = random_batch(rng, k=3)
    scaled = GroupBatch(
        samples=tuple(
            make_sample(
                s.patch_embeddings * 7.5, s.token_embeddings * 0.125, s.token_logprobs
            )
            for s in batch.samples
        ),
        lam=batch.lam,
    )
    assert contrastive_loss(scaled) == pytest.approx(contrastive_loss(batch), rel=1e-9)


def test_range_bounds():
    rng = random.Random(17)
    for k in (1, 2, 5):
        batch = random_batch(rng, k=k)
        l_cl = contrastive_loss(batch)
        assert -k <= l_cl < 0
        assert lm_loss(batch) >= 0


# ---------------------------------------------------------------------------
# lm_loss / combined_loss
# ---------------------------------------------------------------------------


def test_lm_two_half_probability_tokens():
    sample = make_sample([[1.0]], [[1.0], [1.0]], [math.log(0.5), math.log(0.5)])
    batch = GroupBatch(samples=(sample,))
    assert lm_loss(batch) == pytest.approx(2 * math.log(2), abs=1e-12)


def test_lm_zero_when_probability_one():
    batch = GroupBatch(samples=(make_sample([[1.0]], [[1.0]], [0.0]),))
    assert lm_loss(batch) == 0.0


def test_lm_matches_exact_summation():
    rng = random.Random(3)
    batch = random_batch(rng, k=4)
    with mpmath.workdps(60):
        exact = float(
            -mpmath.fsum(
                mpmath.mpf(repr(lp))
                for s in batch.samples
                for lp in s.token_logprobs.tolist()
            )
        )
    assert lm_loss(batch) == pytest.approx(exact, abs=1e-12)


def test_positive_logprobs_rejected():
    with pytest.raises(ValueError):
        make_sample([[1.0]], [[1.0]], [0.1])


def test_nonfinite_rejected():
    with pytest.raises(NonFinite):
        make_sample([[1.0]], [[1.0]], [float("-inf")])
    with pytest.raises(NonFinite):
        make_sample([[float("nan")]], [[1.0]], [0.0])


def test_dim_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        make_sample([[1.0, 2.0]], [[1.0]])
    with pytest.raises(DimensionMismatch):
        GroupBatch(samples=(make_sample([[1.0]], [[1.0]]), make_sample([[1.0, 2.0]], [[1.0, 2.0]])))


def test_lambda_zero_reduces_to_lm():
    rng = random.Random(7)
    batch = random_batch(rng, lam=0.0)
    assert combined_loss(batch) == lm_loss(batch)


def test_combined_composition():
    batch = GroupBatch(
        samples=(
            make_sample([[1.0, 0.0]], [[1.0, 0.0]], [math.log(0.5), math.log(0.5)][:1]),
            make_sample([[0.0, 1.0]], [[0.0, 1.0]], [math.log(0.5)]),
        ),
        lam=0.1,
    )
    l_lm = lm_loss(batch)
    l_cl = contrastive_loss(batch)
    assert combined_loss(batch) == pytest.approx(l_lm + 0.1 * l_cl, abs=1e-12)


def test_combined_trivial_composition():
    batch = GroupBatch(samples=(make_sample([[2.0]], [[3.0]], [0.0]),), lam=1.0)
    assert combined_loss(batch) == -1.0


def test_default_lambda_value_and_report():
    batch = GroupBatch(samples=(make_sample([[2.0]], [[3.0]], [0.0]),))
    assert batch.lam == 0.1
    report = loss_report(batch)
    assert report == {"l_cl": -1.0, "l_lm": 0.0, "l_total": -0.1}


def test_batch_from_obj():
    obj = {
        "lambda": 0.25,
        "samples": [
            {
                "patch_embeddings": [[1.0, 0.0]],
                "token_embeddings": [[0.0, 2.0]],
                "token_logprobs": [-0.5],
            }
        ],
    }
    batch = batch_from_obj(obj)
    assert batch.lam == 0.25 and batch.k == 1


# ---------------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("log_variant", [False, True])
def test_contrastive_gradient_finite_difference(log_variant):
    rng = random.Random(23)
    batch = random_batch(rng, k=3, d=4)
    grads_patches, grads_tokens = contrastive_grad(batch, log_variant=log_variant)
    h = 1e-5

    def loss_with(patches_list, tokens_list):
        perturbed = GroupBatch(
            samples=tuple(
                make_sample(p, t, s.token_logprobs)
                for p, t, s in zip(patches_list, tokens_list, batch.samples)
            ),
            lam=batch.lam,
        )
        return contrastive_loss(perturbed, log_variant=log_variant)

    patches = [s.patch_embeddings.copy() for s in batch.samples]
    tokens = [s.token_embeddings.copy() for s in batch.samples]
    rng_np = np.random.default_rng(1)
    for kind in ("patch", "token"):
        arrays = patches if kind == "patch" else tokens
        grads = grads_patches if kind == "patch" else grads_tokens
        for _ in range(6):
            s_idx = int(rng_np.integers(len(arrays)))
            r = int(rng_np.integers(arrays[s_idx].shape[0]))
            c = int(rng_np.integers(arrays[s_idx].shape[1]))
            arrays[s_idx][r, c] += h
            up = loss_with(patches, tokens)
            arrays[s_idx][r, c] -= 2 * h
            down = loss_with(patches, tokens)
            arrays[s_idx][r, c] += h
            numeric = (up - down) / (2 * h)
            analytic = grads[s_idx][r, c]
            scale = max(abs(numeric), abs(analytic), 1e-8)
            assert abs(numeric - analytic) / scale < 1e-5, (kind, s_idx, r, c)
