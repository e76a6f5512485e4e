"""Shared fixtures-in-code: canonical snippets and a seeded document generator."""

from __future__ import annotations

import random

# The two-column snippet used throughout: body holding two sibling divs,
# the left with bare text, the right with an <h2>.
TWO_COLUMN_SNIPPET = (
    b'<body><div id="leftCol">Selections</div>'
    b'<div id="rightCol"><h2>Customer Reviews</h2></div></body>'
)

TAGS = ["div", "span", "p", "a", "b", "i", "em", "h1", "h2", "ul", "li", "section"]
VOID_SNIPPETS = ["<br>", "<hr>", '<img src="x">']
TEXTS = ["a", "bb", "x y", " ", "hello", "12", "\n  "]


def random_document(
    rng: random.Random,
    max_nodes: int = 30,
    malformed: bool = False,
    compact: bool = True,
) -> bytes:
    """Seeded HTML document whose node count lands near ``max_nodes``."""
    target = rng.randint(max(3, max_nodes // 2), max_nodes)
    count = 0

    def element(depth: int) -> str:
        nonlocal count
        count += 1
        tag = rng.choice(TAGS)
        attrs = ""
        if not compact and rng.random() < 0.3:
            attrs = f' id="n{count}"'
        parts = []
        while count < target and len(parts) < 5 and depth < 6 and rng.random() < 0.85:
            r = rng.random()
            if r < 0.55:
                parts.append(element(depth + 1))
            elif r < 0.68:
                count += 1
                parts.append(rng.choice(VOID_SNIPPETS))
            else:
                count += 1
                parts.append(rng.choice(TEXTS))
        inner = "".join(parts)
        if malformed and rng.random() < 0.12:
            return f"<{tag}{attrs}>{inner}"
        return f"<{tag}{attrs}>{inner}</{tag}>"

    parts = [element(0)]
    while count < target * 0.6:
        parts.append(element(0))
    doc = "".join(parts)
    if malformed and rng.random() < 0.15:
        doc += "</nav>"
    if malformed and rng.random() < 0.15:
        doc = "  " + doc
    return doc.encode()


def per_byte_spans(source: bytes):
    from waffle.dom import Span

    return [Span(i, i + 1) for i in range(len(source))]


def chunk_spans(source: bytes, rng: random.Random, max_chunk: int = 6):
    """Synthetic subword-ish tokenizer: random 1..max_chunk byte chunks."""
    from waffle.dom import Span

    spans = []
    i = 0
    while i < len(source):
        j = min(len(source), i + rng.randint(1, max_chunk))
        spans.append(Span(i, j))
        i = j
    return spans
