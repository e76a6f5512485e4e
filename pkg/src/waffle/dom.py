"""Error-tolerant HTML parser producing a DOM tree with byte-exact ownership spans.

Every byte of the document belongs to exactly one owner: the prefix region
(doctype, leading whitespace and comments before the root element) or the
``own_spans`` of a single node.  Element nodes own their opening and closing
tag bytes; text nodes own their content bytes.  Descendant bytes are never
part of an ancestor's own spans, which is what the attention-mask builder
relies on.

Repair strategy for malformed markup: unclosed tags are auto-closed at the
enclosing boundary (their ``close_span`` stays ``None``), stray closing tags
become text nodes, and an unterminated ``<`` run is treated as text.  When
the top level holds more than a single element (trailing text, sibling
top-level elements, comments after the root), a synthetic ``#document``
element with zero-length tag spans is introduced as the root so the
single-root and coverage invariants hold unconditionally.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .errors import EmptyDocument, EncodingError

__all__ = [
    "Span",
    "DomNode",
    "DomTree",
    "DOCUMENT_TAG",
    "VOID_ELEMENTS",
    "parse_html",
    "serialize",
    "strip_presentation",
    "to_debug_json",
]


class Span(NamedTuple):
    """Half-open byte range [start, end)."""

    start: int
    end: int

    def __len__(self) -> int:  # pragma: no cover - trivial
        return self.end - self.start


DOCUMENT_TAG = "#document"

VOID_ELEMENTS = frozenset(
    {
        "area", "base", "br", "col", "embed", "hr", "img", "input",
        "link", "meta", "param", "source", "track", "wbr",
    }
)

# Content of these elements is scanned as raw text up to the matching close tag.
RAWTEXT_ELEMENTS = frozenset({"script", "style", "textarea", "title"})

ELEMENT = "element"
TEXT = "text"


@dataclass(frozen=True)
class DomNode:
    id: int
    kind: str  # "element" | "text"
    tag: str | None  # lowercase tag name, elements only
    open_span: Span | None  # `<...>` bytes, elements only
    close_span: Span | None  # `</...>` bytes, None for void/unclosed
    own_spans: tuple[Span, ...]
    parent: int | None
    children: tuple[int, ...]
    sibling_index: int

    @property
    def is_element(self) -> bool:
        return self.kind == ELEMENT

    @property
    def is_synthetic_root(self) -> bool:
        return self.tag == DOCUMENT_TAG


@dataclass(frozen=True)
class DomTree:
    nodes: tuple[DomNode, ...]
    root: int
    source: bytes
    prefix_span: Span

    def node(self, node_id: int) -> DomNode:
        return self.nodes[node_id]

    def span_bytes(self, span: Span) -> bytes:
        return self.source[span.start : span.end]

    def subtree_span(self, node_id: int) -> Span:
        """Byte range covering a node's own spans and all its descendants."""
        node = self.nodes[node_id]
        start = node.own_spans[0].start
        end = node.own_spans[-1].end
        for child in node.children:
            child_span = self.subtree_span(child)
            start = min(start, child_span.start)
            end = max(end, child_span.end)
        return Span(start, end)

    def ancestors(self, node_id: int) -> Iterator[int]:
        """Yield the node's ancestors starting at the direct parent."""
        parent = self.nodes[node_id].parent
        while parent is not None:
            yield parent
            parent = self.nodes[parent].parent

    def iter_subtree(self, node_id: int) -> Iterator[int]:
        yield node_id
        for child in self.nodes[node_id].children:
            yield from self.iter_subtree(child)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TAG_NAME_RE = re.compile(rb"[a-zA-Z][a-zA-Z0-9:-]*")
_OPEN = "open"
_CLOSE = "close"
_TEXT = "text"
_COMMENT = "comment"
_BANG = "bang"  # doctype, processing instructions, other <!...> noise


class _Token(NamedTuple):
    kind: str
    span: Span
    tag: str | None = None  # lowercase, open/close only
    self_closing: bool = False


def _scan_tag_end(source: bytes, pos: int) -> int:
    """Index just past the `>` closing a tag starting at `pos`, or -1.

    Quoted attribute values may contain `>`.
    """
    i = pos
    n = len(source)
    quote = None
    while i < n:
        c = source[i]
        if quote is not None:
            if c == quote:
                quote = None
        elif c in (0x22, 0x27):  # " or '
            quote = c
        elif c == 0x3E:  # >
            return i + 1
        i += 1
    return -1


def _lex(source: bytes) -> Iterator[_Token]:
    n = len(source)
    pos = 0
    raw_until_tag: str | None = None  # inside <style>/<script>/... content
    while pos < n:
        if raw_until_tag is not None:
            close_re = re.compile(
                rb"</" + raw_until_tag.encode() + rb"(?=[\s/>]|$)", re.IGNORECASE
            )
            m = close_re.search(source, pos)
            end = m.start() if m else n
            if end > pos:
                yield _Token(_TEXT, Span(pos, end))
            pos = end
            raw_until_tag = None
            continue

        lt = source.find(b"<", pos)
        if lt == -1:
            yield _Token(_TEXT, Span(pos, n))
            break
        if lt > pos:
            yield _Token(_TEXT, Span(pos, lt))
            pos = lt
            continue

        rest = source[pos : pos + 4]
        if rest.startswith(b"<!--"):
            end = source.find(b"-->", pos + 4)
            end = n if end == -1 else end + 3
            yield _Token(_COMMENT, Span(pos, end))
            pos = end
        elif rest.startswith(b"<!") or rest.startswith(b"<?"):
            gt = source.find(b">", pos + 2)
            end = n if gt == -1 else gt + 1
            yield _Token(_BANG, Span(pos, end))
            pos = end
        elif rest.startswith(b"</"):
            m = _TAG_NAME_RE.match(source, pos + 2)
            if m is None:
                # "</" not followed by a name: literal text
                yield _Token(_TEXT, Span(pos, pos + 2))
                pos += 2
                continue
            gt = source.find(b">", m.end())
            end = n if gt == -1 else gt + 1
            yield _Token(_CLOSE, Span(pos, end), tag=m.group().decode("ascii").lower())
            pos = end
        else:
            m = _TAG_NAME_RE.match(source, pos + 1)
            if m is None:
                # stray "<": text up to (not including) the next "<"
                nxt = source.find(b"<", pos + 1)
                end = n if nxt == -1 else nxt
                yield _Token(_TEXT, Span(pos, end))
                pos = end
                continue
            end = _scan_tag_end(source, m.end())
            if end == -1:
                # unterminated tag: treat the remainder as text
                yield _Token(_TEXT, Span(pos, n))
                break
            tag = m.group().decode("ascii").lower()
            self_closing = source[pos:end].rstrip(b">").endswith(b"/")
            yield _Token(_OPEN, Span(pos, end), tag=tag, self_closing=self_closing)
            pos = end
            if tag in RAWTEXT_ELEMENTS and not self_closing and tag not in VOID_ELEMENTS:
                raw_until_tag = tag


# ---------------------------------------------------------------------------
# Tree building
# ---------------------------------------------------------------------------


@dataclass
class _BuildNode:
    kind: str
    tag: str | None = None
    open_span: Span | None = None
    close_span: Span | None = None
    text_span: Span | None = None
    children: list["_BuildNode"] = field(default_factory=list)


def parse_html(source: bytes | str) -> DomTree:
    """Parse HTML bytes into a :class:`DomTree`.

    Raises :class:`EncodingError` on invalid UTF-8 and
    :class:`EmptyDocument` when the source contains no element.
    """
    if isinstance(source, str):
        data = source.encode("utf-8")
    else:
        data = bytes(source)
        try:
            data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"source is not valid UTF-8: {exc}") from None

    top: list[_BuildNode] = []
    stack: list[_BuildNode] = []

    def attach(node: _BuildNode) -> None:
        if stack:
            stack[-1].children.append(node)
        else:
            top.append(node)

    for tok in _lex(data):
        if tok.kind in (_TEXT, _COMMENT, _BANG):
            attach(_BuildNode(TEXT, text_span=tok.span))
        elif tok.kind == _OPEN:
            node = _BuildNode(ELEMENT, tag=tok.tag, open_span=tok.span)
            attach(node)
            if not tok.self_closing and tok.tag not in VOID_ELEMENTS:
                stack.append(node)
        else:  # _CLOSE
            depth = next(
                (i for i in range(len(stack) - 1, -1, -1) if stack[i].tag == tok.tag),
                None,
            )
            if depth is None:
                # stray close tag: keep its bytes as a text node
                attach(_BuildNode(TEXT, text_span=tok.span))
            else:
                # auto-close anything opened above the match
                del stack[depth + 1 :]
                stack[depth].close_span = tok.span
                del stack[depth]
    # EOF auto-closes whatever is left on the stack (close_span stays None)

    return _finalize(data, top)


def _is_prefix_material(node: _BuildNode, source: bytes) -> bool:
    if node.kind != TEXT:
        return False
    raw = source[node.text_span.start : node.text_span.end]
    # whitespace runs, comments and <!doctype>-style noise may precede the root
    return (not raw.strip()) or raw.startswith(b"<!") or raw.startswith(b"<?")


def _finalize(source: bytes, top: list[_BuildNode]) -> DomTree:
    if not any(_contains_element(node) for node in top):
        raise EmptyDocument("source contains no element")

    prefix_end = 0
    region = list(top)
    while region and _is_prefix_material(region[0], source):
        prefix_end = region[0].text_span.end
        region.pop(0)
    prefix_span = Span(0, prefix_end)

    if len(region) == 1 and region[0].kind == ELEMENT:
        root_build = region[0]
    else:
        root_build = _BuildNode(
            ELEMENT,
            tag=DOCUMENT_TAG,
            open_span=Span(prefix_end, prefix_end),
            close_span=Span(len(source), len(source)),
            children=region,
        )

    nodes: list[DomNode] = []

    def visit(build: _BuildNode, parent: int | None, sibling_index: int) -> int:
        node_id = len(nodes)
        nodes.append(None)  # type: ignore[arg-type]  # placeholder, patched below
        child_ids = []
        for i, child in enumerate(build.children):
            child_ids.append(visit(child, node_id, i))
        if build.kind == ELEMENT:
            own = [build.open_span]
            if build.close_span is not None:
                own.append(build.close_span)
            nodes[node_id] = DomNode(
                id=node_id,
                kind=ELEMENT,
                tag=build.tag,
                open_span=build.open_span,
                close_span=build.close_span,
                own_spans=tuple(own),
                parent=parent,
                children=tuple(child_ids),
                sibling_index=sibling_index,
            )
        else:
            nodes[node_id] = DomNode(
                id=node_id,
                kind=TEXT,
                tag=None,
                open_span=None,
                close_span=None,
                own_spans=(build.text_span,),
                parent=parent,
                children=(),
                sibling_index=sibling_index,
            )
        return node_id

    root = visit(root_build, None, 0)
    return DomTree(nodes=tuple(nodes), root=root, source=source, prefix_span=prefix_span)


def _contains_element(node: _BuildNode) -> bool:
    if node.kind == ELEMENT:
        return True
    return any(_contains_element(c) for c in node.children)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize(tree: DomTree) -> bytes:
    """Reassemble the exact source bytes from prefix + own spans."""
    spans = [tree.prefix_span]
    spans.extend(span for node in tree.nodes for span in node.own_spans)
    spans.sort()
    return b"".join(tree.source[s.start : s.end] for s in spans)


def strip_presentation(tree: DomTree) -> bytes:
    """Serialize with every ``<style>`` element deleted and all attributes removed.

    Tag names are lowercased, text content is preserved verbatim, and the
    output is idempotent under re-parse + re-strip.
    """
    out = bytearray(tree.source[tree.prefix_span.start : tree.prefix_span.end])

    def emit(node_id: int) -> None:
        node = tree.nodes[node_id]
        if node.kind == TEXT:
            span = node.own_spans[0]
            out.extend(tree.source[span.start : span.end])
            return
        if node.tag == "style":
            return
        if not node.is_synthetic_root:
            out.extend(b"<" + node.tag.encode("ascii") + b">")
        for child in node.children:
            emit(child)
        if not node.is_synthetic_root and node.close_span is not None:
            out.extend(b"</" + node.tag.encode("ascii") + b">")

    emit(tree.root)
    return bytes(out)


def to_debug_json(tree: DomTree) -> str:
    """JSON debug form with byte offsets (half-open ranges)."""
    payload = {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "tag": n.tag,
                "own_spans": [[s.start, s.end] for s in n.own_spans],
                "parent": n.parent,
                "children": list(n.children),
            }
            for n in tree.nodes
        ],
        "root": tree.root,
        "prefix_span": [tree.prefix_span.start, tree.prefix_span.end],
    }
    return json.dumps(payload)


# ---------------------------------------------------------------------------
# Attribute scanning (used by the mutator and kept close to the lexer)
# ---------------------------------------------------------------------------


class Attribute(NamedTuple):
    name: str
    value: str | None
    name_span: Span  # absolute byte offsets into the tree source
    value_span: Span | None  # bytes of the value, excluding quotes


_WS = b" \t\n\r\f"


def element_attributes(tree: DomTree, node_id: int) -> list[Attribute]:
    """Scan an element's opening tag for attributes."""
    node = tree.nodes[node_id]
    if node.kind != ELEMENT or node.is_synthetic_root:
        return []
    raw = tree.source
    start, end = node.open_span
    i = start + 1  # skip '<'
    m = _TAG_NAME_RE.match(raw, i)
    if m is None:
        return []
    i = m.end()
    limit = end - 1  # before '>'
    attrs: list[Attribute] = []
    while i < limit:
        while i < limit and raw[i] in _WS:
            i += 1
        if i >= limit or raw[i : i + 1] == b"/":
            break
        name_start = i
        while i < limit and raw[i] not in _WS and raw[i] not in b"=/>":
            i += 1
        name = raw[name_start:i].decode("utf-8", "replace").lower()
        if not name:
            i += 1
            continue
        j = i
        while j < limit and raw[j] in _WS:
            j += 1
        if j < limit and raw[j : j + 1] == b"=":
            j += 1
            while j < limit and raw[j] in _WS:
                j += 1
            if j < limit and raw[j] in (0x22, 0x27):
                quote = raw[j]
                vstart = j + 1
                vend = raw.find(bytes([quote]), vstart, limit)
                if vend == -1:
                    vend = limit
                    i = limit
                else:
                    i = vend + 1
            else:
                vstart = j
                vend = j
                while vend < limit and raw[vend] not in _WS:
                    vend += 1
                i = vend
            attrs.append(
                Attribute(
                    name=name,
                    value=raw[vstart:vend].decode("utf-8", "replace"),
                    name_span=Span(name_start, name_start + len(name)),
                    value_span=Span(vstart, vend),
                )
            )
        else:
            attrs.append(
                Attribute(
                    name=name,
                    value=None,
                    name_span=Span(name_start, name_start + len(name)),
                    value_span=None,
                )
            )
    return attrs
