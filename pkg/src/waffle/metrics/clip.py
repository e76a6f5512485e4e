"""Cosine similarity over externally produced embedding vectors, scaled to [-100, 100]."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, ZeroVector

__all__ = ["clip_cosine"]


def clip_cosine(e_a: Sequence[float], e_b: Sequence[float]) -> float:
    a = np.asarray(e_a, dtype=np.float64)
    b = np.asarray(e_b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0:
        raise DimensionMismatch("embeddings must be nonempty 1-D vectors")
    if a.shape != b.shape:
        raise DimensionMismatch(f"embedding dims differ: {a.size} vs {b.size}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cannot take cosine of a zero vector")
    return 100.0 * float(a @ b / (norm_a * norm_b))
