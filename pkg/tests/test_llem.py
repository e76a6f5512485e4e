"""LLEM scoring against the exhaustive-assignment oracle."""

import itertools
import random

import pytest

from oracles import oracle_llem

from waffle.metrics import LlemScore, TextBlock, llem, text_similarity

VIEWPORT = (1280.0, 720.0)


def block(text, x=0.0, y=0.0, w=100.0, h=20.0, color=(0, 0, 0)):
    return TextBlock(text=text, bbox=(x, y, w, h), color=color)


def test_identical_lists_score_all_hundred():
    blocks = [
        block("header", 10, 10, color=(10, 20, 30)),
        block("body text", 10, 50, color=(0, 0, 0)),
        block("footer", 10, 600, color=(200, 200, 200)),
    ]
    score = llem(blocks, list(blocks), VIEWPORT)
    assert (score.block_match, score.text, score.position, score.color) == (
        100.0,
        100.0,
        100.0,
        100.0,
    )
    assert score.average == 100.0


def test_below_threshold_pairs_score_zero():
    score = llem([block("hello")], [block("world")], VIEWPORT)
    assert text_similarity("hello", "world") == pytest.approx(0.2)
    assert (score.block_match, score.text, score.position, score.color) == (
        0.0,
        0.0,
        0.0,
        0.0,
    )


def test_empty_cases():
    assert llem([], [], VIEWPORT) == LlemScore(100.0, 100.0, 100.0, 100.0)
    assert llem([block("x")], [], VIEWPORT) == LlemScore(0.0, 0.0, 0.0, 0.0)
    assert llem([], [block("x")], VIEWPORT) == LlemScore(0.0, 0.0, 0.0, 0.0)


def test_empty_strings_count_as_identical():
    assert text_similarity("", "") == 1.0


def test_three_by_three_against_enumeration_oracle():
    gt = [
        block("navigation menu", 0, 0, 200, 30, (0, 0, 0)),
        block("welcome to the shop", 10, 100, 400, 40, (30, 30, 30)),
        block("contact us", 10, 600, 120, 20, (90, 10, 10)),
    ]
    gen = [
        block("welcome to the shoppe", 12, 104, 390, 40, (25, 25, 35)),
        block("navigation menu", 0, 2, 205, 28, (0, 0, 0)),
        block("kontakt", 10, 640, 100, 20, (90, 10, 10)),
    ]
    score = llem(gt, gen, VIEWPORT)
    expected = oracle_llem(gt, gen, VIEWPORT)
    assert score.block_match == pytest.approx(expected["block_match"], abs=1e-9)
    assert score.text == pytest.approx(expected["text"], abs=1e-9)
    assert score.position == pytest.approx(expected["position"], abs=1e-9)
    assert score.color == pytest.approx(expected["color"], abs=1e-9)


def test_random_instances_match_oracle():
    rng = random.Random(31)
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    for _ in range(25):
        def rand_blocks(n):
            return [
                block(
                    " ".join(rng.sample(words, rng.randint(1, 3))),
                    rng.uniform(0, 1200),
                    rng.uniform(0, 700),
                    rng.uniform(10, 300),
                    rng.uniform(10, 60),
                    tuple(rng.randrange(256) for _ in range(3)),
                )
                for _ in range(n)
            ]

        gt = rand_blocks(rng.randint(1, 4))
        gen = rand_blocks(rng.randint(1, 4))
        got = llem(gt, gen, VIEWPORT)
        expected = oracle_llem(gt, gen, VIEWPORT)
        for key in ("block_match", "text", "position", "color"):
            assert getattr(got, key) == pytest.approx(expected[key], abs=1e-9), (gt, gen)


def test_block_order_permutation_invariance():
    rng = random.Random(7)
    gt = [
        block("one", 0, 0, color=(1, 2, 3)),
        block("two", 50, 50, color=(4, 5, 6)),
        block("three", 100, 100, color=(7, 8, 9)),
    ]
    gen = [
        block("one!", 2, 2, color=(1, 2, 3)),
        block("twoo", 52, 48, color=(4, 5, 9)),
        block("thre", 99, 104, color=(7, 9, 9)),
    ]
    base = llem(gt, gen, VIEWPORT)
    for gt_perm in itertools.permutations(gt):
        gen_perm = list(gen)
        rng.shuffle(gen_perm)
        again = llem(list(gt_perm), gen_perm, VIEWPORT)
        assert again == base


def test_all_components_within_bounds():
    rng = random.Random(3)
    for _ in range(20):
        gt = [
            block(
                rng.choice(["a", "ab", "abc", ""]),
                rng.uniform(-100, 1500),
                rng.uniform(-100, 900),
                rng.uniform(0, 400),
                rng.uniform(0, 60),
                tuple(rng.randrange(256) for _ in range(3)),
            )
            for _ in range(rng.randint(0, 3))
        ]
        gen = [
            block(
                rng.choice(["a", "ab", "abc", ""]),
                rng.uniform(-100, 1500),
                rng.uniform(-100, 900),
                rng.uniform(0, 400),
                rng.uniform(0, 60),
                tuple(rng.randrange(256) for _ in range(3)),
            )
            for _ in range(rng.randint(0, 3))
        ]
        score = llem(gt, gen, VIEWPORT)
        for value in (score.block_match, score.text, score.position, score.color, score.average):
            assert 0.0 <= value <= 100.0


def test_average_is_mean_of_components():
    score = LlemScore(80.0, 60.0, 40.0, 20.0)
    assert score.average == 50.0


def test_size_weighted_block_match():
    # one long matched block dominates a short unmatched one
    gt = [block("a" * 90), block("zz", 500, 500)]
    gen = [block("a" * 90)]
    score = llem(gt, gen, VIEWPORT)
    assert score.block_match == pytest.approx(100.0 * 180 / 182)


def test_negative_bbox_rejected():
    with pytest.raises(ValueError):
        block("x", 0, 0, -5, 10)
