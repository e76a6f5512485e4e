"""Numeric reference for the contrastive + language-modeling objective.

For a group of k (image, code) pairs, each sample carries the patch
embeddings of its page image, the token embeddings of its code, and the
per-token log-probabilities.  The contrastive term compares the mean token
embedding of every sample against the mean patch embedding of every sample
through a row-wise softmax over cosine similarities and sums the negated
diagonal probabilities:

    L_cl = -sum_i softmax_j(sim(t_i, v_j))[i]

Note the term inside the sum is the softmax *probability*, not its log;
``log_variant=True`` switches to the conventional InfoNCE form
``-sum_i log softmax``.  The LM term is the plain negative sum of all token
log-probabilities, and the combined objective is ``L_lm + lambda * L_cl``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyList, NonFinite, ZeroVector

__all__ = [
    "SamplePair",
    "GroupBatch",
    "mean_embeddings",
    "contrastive_loss",
    "contrastive_grad",
    "lm_loss",
    "combined_loss",
    "loss_report",
    "batch_from_obj",
]

DEFAULT_LAMBDA = 0.1


def _as_matrix(rows, what: str) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise EmptyList(f"{what} must be a nonempty list of nonempty vectors")
    if not np.isfinite(arr).all():
        raise NonFinite(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class SamplePair:
    patch_embeddings: np.ndarray  # (M, d)
    token_embeddings: np.ndarray  # (N, d)
    token_logprobs: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        patches = _as_matrix(self.patch_embeddings, "patch_embeddings")
        tokens = _as_matrix(self.token_embeddings, "token_embeddings")
        if patches.shape[1] != tokens.shape[1]:
            raise DimensionMismatch(
                f"patch dim {patches.shape[1]} != token dim {tokens.shape[1]}"
            )
        logprobs = np.asarray(self.token_logprobs, dtype=np.float64)
        if logprobs.ndim != 1 or logprobs.shape[0] != tokens.shape[0]:
            raise DimensionMismatch("token_logprobs length must match token count")
        if not np.isfinite(logprobs).all():
            raise NonFinite("token_logprobs contains non-finite values")
        if (logprobs > 0).any():
            raise ValueError("log-probabilities must be <= 0")
        object.__setattr__(self, "patch_embeddings", patches)
        object.__setattr__(self, "token_embeddings", tokens)
        object.__setattr__(self, "token_logprobs", logprobs)

    @property
    def dim(self) -> int:
        return self.patch_embeddings.shape[1]


@dataclass(frozen=True)
class GroupBatch:
    samples: tuple[SamplePair, ...]
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        if not samples:
            raise EmptyList("a batch needs at least one sample")
        dims = {s.dim for s in samples}
        if len(dims) != 1:
            raise DimensionMismatch(f"samples disagree on embedding dim: {sorted(dims)}")
        object.__setattr__(self, "samples", samples)

    @property
    def k(self) -> int:
        return len(self.samples)


def mean_embeddings(sample: SamplePair) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic means over patch vectors and over token vectors."""
    return (
        sample.patch_embeddings.mean(axis=0),
        sample.token_embeddings.mean(axis=0),
    )


def _mean_matrices(batch: GroupBatch) -> tuple[np.ndarray, np.ndarray]:
    v_bar = np.stack([s.patch_embeddings.mean(axis=0) for s in batch.samples])
    t_bar = np.stack([s.token_embeddings.mean(axis=0) for s in batch.samples])
    for name, mat in (("patch", v_bar), ("token", t_bar)):
        norms = np.linalg.norm(mat, axis=1)
        if (norms == 0).any():
            raise ZeroVector(f"a mean {name} embedding has zero norm")
    return v_bar, t_bar


def _similarity(t_bar: np.ndarray, v_bar: np.ndarray) -> np.ndarray:
    tn = t_bar / np.linalg.norm(t_bar, axis=1, keepdims=True)
    vn = v_bar / np.linalg.norm(v_bar, axis=1, keepdims=True)
    return tn @ vn.T  # sim[i, j] = cos(t_i, v_j)


def _softmax_rows(sim: np.ndarray) -> np.ndarray:
    shifted = sim - sim.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def contrastive_loss(batch: GroupBatch, log_variant: bool = False) -> float:
    v_bar, t_bar = _mean_matrices(batch)
    p = _softmax_rows(_similarity(t_bar, v_bar))
    diag = np.diag(p)
    if log_variant:
        return float(-np.log(diag).sum())
    return float(-diag.sum())


def lm_loss(batch: GroupBatch) -> float:
    return float(-sum(s.token_logprobs.sum() for s in batch.samples))


def combined_loss(batch: GroupBatch, log_variant: bool = False) -> float:
    return lm_loss(batch) + batch.lam * contrastive_loss(batch, log_variant=log_variant)


def contrastive_grad(
    batch: GroupBatch, log_variant: bool = False
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradient of the contrastive term w.r.t. every raw embedding.

    Returns (patch gradients, token gradients) shaped like the inputs; used
    as the oracle for finite-difference checks and for training ports.
    """
    v_bar, t_bar = _mean_matrices(batch)
    k, d = v_bar.shape
    sim = _similarity(t_bar, v_bar)
    p = _softmax_rows(sim)
    diag = np.diag(p)

    # dL/dsim[i, j]
    if log_variant:
        # L = -sum_i log p_ii ; dL/ds_ij = p_ij - delta_ij
        ds = p - np.eye(k)
    else:
        # L = -sum_i p_ii ; dL/ds_ij = -p_ii * (delta_ij - p_ij)
        ds = -diag[:, None] * (np.eye(k) - p)

    t_norm = np.linalg.norm(t_bar, axis=1)
    v_norm = np.linalg.norm(v_bar, axis=1)

    grad_t_bar = np.zeros_like(t_bar)
    grad_v_bar = np.zeros_like(v_bar)
    for i in range(k):
        for j in range(k):
            g = ds[i, j]
            if g == 0.0:
                continue
            ti, vj = t_bar[i], v_bar[j]
            nt, nv = t_norm[i], v_norm[j]
            c = sim[i, j]
            grad_t_bar[i] += g * (vj / (nt * nv) - c * ti / (nt * nt))
            grad_v_bar[j] += g * (ti / (nt * nv) - c * vj / (nv * nv))

    grads_patches = []
    grads_tokens = []
    for idx, sample in enumerate(batch.samples):
        m = sample.patch_embeddings.shape[0]
        n = sample.token_embeddings.shape[0]
        grads_patches.append(np.tile(grad_v_bar[idx] / m, (m, 1)))
        grads_tokens.append(np.tile(grad_t_bar[idx] / n, (n, 1)))
    return grads_patches, grads_tokens


# ---------------------------------------------------------------------------
# Batch file format
# ---------------------------------------------------------------------------


def batch_from_obj(obj: dict) -> GroupBatch:
    """Build a batch from the ``--batch`` JSON object."""
    samples = tuple(
        SamplePair(
            patch_embeddings=s["patch_embeddings"],
            token_embeddings=s["token_embeddings"],
            token_logprobs=s["token_logprobs"],
        )
        for s in obj["samples"]
    )
    return GroupBatch(samples=samples, lam=float(obj.get("lambda", DEFAULT_LAMBDA)))


def loss_report(batch: GroupBatch, log_variant: bool = False) -> dict:
    """`{l_cl, l_lm, l_total}` rounded to 12 significant digits."""
    l_cl = contrastive_loss(batch, log_variant=log_variant)
    l_lm = lm_loss(batch)
    l_total = l_lm + batch.lam * l_cl

    def sig12(x: float) -> float:
        return float(f"{x:.12g}") + 0.0  # +0.0 normalizes -0.0

    return {"l_cl": sig12(l_cl), "l_lm": sig12(l_lm), "l_total": sig12(l_total)}
