"""Align a tokenization of the HTML byte stream onto DOM nodes.

A tokenization is just a list of half-open byte ranges covering the source.
Each token is assigned to the node owning its *first* byte; tokens whose
bytes cross a node-ownership boundary are reported in ``straddling`` so
downstream users can audit how their tokenizer splits tag boundaries.

Bytes in the document prefix (doctype, leading whitespace) belong to no
node and map to the :data:`PREFIX` sentinel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

from .dom import DomTree, Span
from .errors import CoverageError

__all__ = [
    "PREFIX",
    "TokenAlignment",
    "align",
    "reference_tokenize",
    "byte_owners",
    "load_token_spans",
    "dump_token_spans",
]

PREFIX = -1  # node_of sentinel for tokens owned by the document prefix


@dataclass(frozen=True)
class TokenAlignment:
    tokens: tuple[Span, ...]  # sorted, disjoint, cover the source exactly
    node_of: tuple[int, ...]  # node id or PREFIX, per token
    straddling: frozenset[int]  # token indices crossing ownership boundaries
    n_prompt: int  # prompt-region tokens preceding the HTML stream
    source_length: int

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_total(self) -> int:
        """Mask width: prompt tokens followed by source tokens."""
        return self.n_prompt + len(self.tokens)


def byte_owners(tree: DomTree) -> list[int]:
    """Owner node id for every source byte (PREFIX for prefix bytes)."""
    owners = [PREFIX] * len(tree.source)
    for node in tree.nodes:
        for span in node.own_spans:
            for b in range(span.start, span.end):
                owners[b] = node.id
    return owners


def _check_coverage(token_spans: Iterable[Span], length: int) -> tuple[Span, ...]:
    spans = tuple(Span(int(s), int(e)) for s, e in token_spans)
    expected = 0
    for span in spans:
        if span.start != expected:
            raise CoverageError(
                f"token span {span} leaves a gap or overlaps (expected start {expected})"
            )
        if span.end <= span.start:
            raise CoverageError(f"token span {span} is empty or reversed")
        expected = span.end
    if expected != length:
        raise CoverageError(
            f"token spans cover [0, {expected}) but the source has {length} bytes"
        )
    return spans


def align(
    tree: DomTree, token_spans: Iterable[Span], n_prompt: int = 0
) -> TokenAlignment:
    """Assign each token to the node owning its first byte."""
    if n_prompt < 0:
        raise ValueError("n_prompt must be >= 0")
    spans = _check_coverage(token_spans, len(tree.source))
    owners = byte_owners(tree)
    node_of = []
    straddling = set()
    for i, span in enumerate(spans):
        first = owners[span.start]
        node_of.append(first)
        if any(owners[b] != first for b in range(span.start + 1, span.end)):
            straddling.add(i)
    return TokenAlignment(
        tokens=spans,
        node_of=tuple(node_of),
        straddling=frozenset(straddling),
        n_prompt=n_prompt,
        source_length=len(tree.source),
    )


def reference_tokenize(source: bytes | str) -> list[Span]:
    """Built-in tokenizer: maximal runs of letters, digits, or whitespace;
    any other byte is a single-byte token.

    Bytes >= 0x80 count as letters so multi-byte UTF-8 sequences stay whole.
    """
    if isinstance(source, str):
        source = source.encode("utf-8")

    def klass(b: int) -> int:
        if b in b" \t\n\r\f\v":
            return 0
        if 0x30 <= b <= 0x39:
            return 1
        if 0x41 <= b <= 0x5A or 0x61 <= b <= 0x7A or b == 0x5F or b >= 0x80:
            return 2
        return 3  # punctuation: never merged

    spans: list[Span] = []
    i = 0
    n = len(source)
    while i < n:
        k = klass(source[i])
        j = i + 1
        if k != 3:
            while j < n and klass(source[j]) == k:
                j += 1
        spans.append(Span(i, j))
        i = j
    return spans


def load_token_spans(fp: IO[str] | Iterable[str]) -> list[Span]:
    """Read the JSONL ingest format: one `{"i": idx, "start": b, "end": b}` per line."""
    rows = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        rows.append((int(obj["i"]), Span(int(obj["start"]), int(obj["end"]))))
    rows.sort(key=lambda r: r[0])
    for expected, (i, _) in enumerate(rows):
        if i != expected:
            raise CoverageError(f"token indices are not contiguous: missing {expected}")
    return [span for _, span in rows]


def dump_token_spans(spans: Iterable[Span], fp: IO[str]) -> None:
    for i, span in enumerate(spans):
        fp.write(json.dumps({"i": i, "start": span.start, "end": span.end}) + "\n")
