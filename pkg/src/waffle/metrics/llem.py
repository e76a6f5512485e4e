"""Low-level element matching between two rendered pages' text blocks.

Blocks are paired by maximum-weight bipartite assignment on text
similarity ``sim_t(a, b) = 1 - edit_distance(a, b) / max(|a|, |b|)``
(two empty strings count as identical); matched pairs below 0.5 are then
discarded.  Four sub-scores over the surviving pairs:

* block_match: length-weighted share of matched text,
  ``100 * sum(|a| + |b|) / (sum_gt |a| + sum_gen |b|)``;
* text: mean ``sim_t`` of matched pairs;
* position: mean ``1 - max(|dcx| / vw, |dcy| / vh)`` over bbox centers,
  clamped at 0, normalized by the viewport;
* color: mean ``1 - ||rgb_a - rgb_b||_2 / (255 * sqrt(3))``.

Each is a percentage; the average is their plain mean.  Two empty lists
score all 100, one empty side scores all 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["TextBlock", "LlemScore", "llem", "text_similarity"]


@dataclass(frozen=True)
class TextBlock:
    text: str
    bbox: tuple[float, float, float, float]  # x, y, w, h in CSS pixels
    color: tuple[int, int, int]

    def __post_init__(self) -> None:
        if self.bbox[2] < 0 or self.bbox[3] < 0:
            raise ValueError("bbox width/height must be >= 0")

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class LlemScore:
    block_match: float
    text: float
    position: float
    color: float

    @property
    def average(self) -> float:
        return (self.block_match + self.text + self.position + self.color) / 4.0

    def as_dict(self) -> dict:
        return {
            "average": self.average,
            "block_match": self.block_match,
            "text": self.text,
            "position": self.position,
            "color": self.color,
        }


def edit_distance(a: str, b: str) -> int:
    """Plain Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def text_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


MATCH_THRESHOLD = 0.5


def llem(
    gt: Sequence[TextBlock],
    gen: Sequence[TextBlock],
    viewport: tuple[float, float] = (1280.0, 720.0),
) -> LlemScore:
    if not gt and not gen:
        return LlemScore(100.0, 100.0, 100.0, 100.0)
    if not gt or not gen:
        return LlemScore(0.0, 0.0, 0.0, 0.0)

    sim = np.array(
        [[text_similarity(a.text, b.text) for b in gen] for a in gt], dtype=np.float64
    )
    rows, cols = linear_sum_assignment(sim, maximize=True)
    pairs = [(r, c) for r, c in zip(rows, cols) if sim[r, c] >= MATCH_THRESHOLD]

    if not pairs:
        return LlemScore(0.0, 0.0, 0.0, 0.0)

    total_len = sum(len(a.text) for a in gt) + sum(len(b.text) for b in gen)
    matched_len = sum(len(gt[r].text) + len(gen[c].text) for r, c in pairs)
    block_match = 100.0 * matched_len / total_len if total_len else 100.0

    text_score = 100.0 * float(np.mean([sim[r, c] for r, c in pairs]))

    vw, vh = viewport
    position_terms = []
    for r, c in pairs:
        (ax, ay), (bx, by) = gt[r].center, gen[c].center
        off = max(abs(ax - bx) / vw, abs(ay - by) / vh)
        position_terms.append(max(0.0, 1.0 - off))
    position_score = 100.0 * float(np.mean(position_terms))

    max_color_dist = 255.0 * sqrt(3.0)
    color_terms = [
        1.0
        - sqrt(sum((pa - pb) ** 2 for pa, pb in zip(gt[r].color, gen[c].color)))
        / max_color_dist
        for r, c in pairs
    ]
    color_score = 100.0 * float(np.mean(color_terms))

    return LlemScore(block_match, text_score, position_score, color_score)
