"""Frequency-weighted HTML/CSS mutation and contrastive group assembly.

Seven mutation categories cover the most common rendering-failure causes.
Six rewrite CSS (preferring an existing declaration of the sampled property,
falling back to an injected inline declaration); the seventh duplicates a
random element's subtree in place.  Category draw weights default to the
observed failure frequencies Color 12, Size 11, Margin 19, Font 10,
Display 1, Position 2, HtmlStructure 8 (total 63).

All operations are deterministic functions of (source, category, seed).
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from typing import Callable, Sequence

from . import dom
from .dom import DomTree, Span, element_attributes, parse_html
from .errors import NoTarget

__all__ = [
    "MutationCategory",
    "Mutation",
    "MutantRecord",
    "MutantGroup",
    "DEFAULT_CATEGORIES",
    "CSS_PROPERTIES",
    "KEYWORD_POOLS",
    "PIXEL_RANGES",
    "mutate",
    "sample_category",
    "build_group",
    "group_to_json",
    "group_from_json",
]


@dataclass(frozen=True)
class MutationCategory:
    name: str
    weight: int


DEFAULT_CATEGORIES: tuple[MutationCategory, ...] = (
    MutationCategory("Color", 12),
    MutationCategory("Size", 11),
    MutationCategory("Margin", 19),
    MutationCategory("Font", 10),
    MutationCategory("Display", 1),
    MutationCategory("Position", 2),
    MutationCategory("HtmlStructure", 8),
)

# Properties each CSS category may touch.
CSS_PROPERTIES: dict[str, tuple[str, ...]] = {
    "Color": ("color", "background-color", "border-color"),
    "Size": ("width", "height"),
    "Margin": ("margin", "margin-top", "margin-right", "margin-bottom", "margin-left"),
    "Font": ("font-size",),
    "Display": ("text-align", "display", "flex-direction", "justify-content"),
    "Position": ("border-radius", "position", "top", "right"),
}

KEYWORD_POOLS: dict[str, tuple[str, ...]] = {
    "text-align": ("left", "right", "center", "justify"),
    "display": ("block", "inline", "inline-block", "flex", "grid", "none"),
    "flex-direction": ("row", "row-reverse", "column", "column-reverse"),
    "justify-content": ("flex-start", "flex-end", "center", "space-between", "space-around"),
    "position": ("static", "relative", "absolute", "fixed"),
    # border-radius is length-valued; the pool uses length literals
    "border-radius": ("0", "4px", "8px", "16px", "50%"),
    "top": ("0", "8px", "16px", "32px", "auto"),
    "right": ("0", "8px", "16px", "32px", "auto"),
}

# Inclusive pixel ranges for the numeric categories.
PIXEL_RANGES: dict[str, tuple[int, int]] = {
    "Size": (0, 500),
    "Margin": (0, 100),
    "Font": (0, 40),
}

# Duplicating these would break the document shell.
STRUCTURE_EXCLUDED_TAGS = frozenset({"head", "header", "html", "body"})

# Elements that never render; pointless targets for inline style injection.
_NON_RENDERED_TAGS = frozenset({"head", "meta", "title", "link", "script", "style", "base"})


@dataclass(frozen=True)
class Mutation:
    category: str
    target: int | tuple[str, str]  # node id, or (selector, property) in a style block
    old_value: str | None
    new_value: str
    seed: int


@dataclass(frozen=True)
class MutantRecord:
    html: bytes
    mutations: tuple[Mutation, ...]
    status: str  # ok | render_failed | blank | duplicate


@dataclass(frozen=True)
class MutantGroup:
    original: bytes
    mutants: tuple[MutantRecord, ...]
    group_id: str
    seed: int
    warning: str | None = None

    @property
    def survivors(self) -> tuple[MutantRecord, ...]:
        return tuple(m for m in self.mutants if m.status == "ok")


# ---------------------------------------------------------------------------
# Random draws
# ---------------------------------------------------------------------------


def _rng(seed: int) -> random.Random:
    return random.Random(seed)


def sample_category(
    categories: Sequence[MutationCategory] = DEFAULT_CATEGORIES, seed: int = 0
) -> MutationCategory:
    """Draw one category with probability weight / total."""
    if not categories or any(c.weight <= 0 for c in categories):
        raise ValueError("weights must be positive")
    total = sum(c.weight for c in categories)
    pick = _rng(seed).random() * total
    acc = 0.0
    for cat in categories:
        acc += cat.weight
        if pick < acc:
            return cat
    return categories[-1]


def _sample_value(category: str, prop: str, rng) -> str:
    if category == "Color":
        return f"#{rng.randrange(1 << 24):06x}"
    if category in PIXEL_RANGES:
        lo, hi = PIXEL_RANGES[category]
        return f"{rng.randint(lo, hi)}px"
    return rng.choice(KEYWORD_POOLS[prop])


# ---------------------------------------------------------------------------
# Declaration discovery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _DeclSite:
    selector: str | None  # None for inline styles
    node_id: int | None  # element id for inline styles
    prop: str
    value_span: Span  # absolute byte offsets of the value text
    value: str


_COMMENT_RE = re.compile(rb"/\*.*?\*/", re.DOTALL)


def _mask_comments(css: bytes) -> bytes:
    return _COMMENT_RE.sub(lambda m: b" " * (m.end() - m.start()), css)


def _decl_re(prop: str) -> re.Pattern[bytes]:
    return re.compile(
        rb"(?<![-a-zA-Z])" + prop.encode() + rb"\s*:\s*(?P<value>[^;}{]*)"
    )


def _selector_before(css: bytes, pos: int) -> str:
    brace = css.rfind(b"{", 0, pos)
    if brace == -1:
        return ""
    start = max(css.rfind(b"}", 0, brace), css.rfind(b";", 0, brace)) + 1
    return css[start:brace].decode("utf-8", "replace").strip()


def _find_declarations(tree: DomTree, prop: str) -> list[_DeclSite]:
    sites: list[_DeclSite] = []
    pattern = _decl_re(prop)
    for node in tree.nodes:
        if node.kind != dom.ELEMENT or node.is_synthetic_root:
            continue
        if node.tag == "style":
            for child_id in node.children:
                child = tree.nodes[child_id]
                if child.kind != dom.TEXT:
                    continue
                span = child.own_spans[0]
                css = _mask_comments(tree.span_bytes(span))
                for m in pattern.finditer(css):
                    # only true declarations: inside braces, not selector text
                    # like `.top:hover {` outside them
                    if css.rfind(b"{", 0, m.start()) <= css.rfind(b"}", 0, m.start()):
                        continue
                    vstart, vend = m.span("value")
                    value = m.group("value").decode("utf-8", "replace").rstrip()
                    vend = vstart + len(m.group("value").rstrip())
                    sites.append(
                        _DeclSite(
                            selector=_selector_before(css, m.start()),
                            node_id=None,
                            prop=prop,
                            value_span=Span(span.start + vstart, span.start + vend),
                            value=value,
                        )
                    )
        else:
            for attr in element_attributes(tree, node.id):
                if attr.name != "style" or attr.value_span is None:
                    continue
                css = _mask_comments(tree.span_bytes(attr.value_span))
                for m in pattern.finditer(css):
                    vstart, vend = m.span("value")
                    value = m.group("value").decode("utf-8", "replace").rstrip()
                    vend = vstart + len(m.group("value").rstrip())
                    sites.append(
                        _DeclSite(
                            selector=None,
                            node_id=node.id,
                            prop=prop,
                            value_span=Span(
                                attr.value_span.start + vstart,
                                attr.value_span.start + vend,
                            ),
                            value=value,
                        )
                    )
    sites.sort(key=lambda s: s.value_span.start)
    return sites


def _injectable_elements(tree: DomTree) -> list[int]:
    return [
        n.id
        for n in tree.nodes
        if n.kind == dom.ELEMENT
        and not n.is_synthetic_root
        and n.tag not in _NON_RENDERED_TAGS
    ]


def _splice(source: bytes, start: int, end: int, replacement: bytes) -> bytes:
    return source[:start] + replacement + source[end:]


def _inject_inline(tree: DomTree, node_id: int, prop: str, value: str) -> bytes:
    source = tree.source
    node = tree.nodes[node_id]
    style_attr = next(
        (a for a in element_attributes(tree, node_id) if a.name == "style"), None
    )
    decl = f"{prop}: {value}"
    if style_attr is not None and style_attr.value_span is not None:
        vstart, vend = style_attr.value_span
        quoted = vstart > 0 and source[vstart - 1] in (0x22, 0x27)
        if quoted:
            return _splice(source, vend, vend, f"; {decl}".encode())
        merged = b'"' + source[vstart:vend] + f"; {decl}".encode() + b'"'
        return _splice(source, vstart, vend, merged)
    open_end = node.open_span.end
    insert_at = open_end - 1
    if source[open_end - 2 : open_end] == b"/>":
        insert_at = open_end - 2
    return _splice(source, insert_at, insert_at, f' style="{decl}"'.encode())


# ---------------------------------------------------------------------------
# Mutation operations
# ---------------------------------------------------------------------------


def mutate(
    source: bytes | str, category: MutationCategory | str, seed: int
) -> tuple[bytes, Mutation]:
    """Apply one mutation of the given category; deterministic in (source, category, seed)."""
    tree = parse_html(source)
    return _mutate_tree(tree, category, seed)


def _mutate_tree(
    tree: DomTree, category: MutationCategory | str, seed: int
) -> tuple[bytes, Mutation]:
    name = category.name if isinstance(category, MutationCategory) else category
    rng = _rng(seed)
    if name == "HtmlStructure":
        return _mutate_structure(tree, rng, seed)
    if name not in CSS_PROPERTIES:
        raise ValueError(f"unknown mutation category {name!r}")
    return _mutate_css(tree, name, rng, seed)


def _mutate_css(tree: DomTree, name: str, rng, seed: int) -> tuple[bytes, Mutation]:
    prop = rng.choice(CSS_PROPERTIES[name])
    sites = _find_declarations(tree, prop)
    if sites:
        site = sites[rng.randrange(len(sites))]
        new_value = _sample_value(name, prop, rng)
        while new_value == site.value:
            new_value = _sample_value(name, prop, rng)
        mutated = _splice(
            tree.source, site.value_span.start, site.value_span.end, new_value.encode()
        )
        target: int | tuple[str, str]
        if site.node_id is not None:
            target = site.node_id
        else:
            target = (site.selector or "", prop)
        mutation = Mutation(name, target, site.value, new_value, seed)
        return mutated, mutation

    candidates = _injectable_elements(tree)
    if not candidates:
        raise NoTarget(f"no element eligible for {name} injection")
    node_id = candidates[rng.randrange(len(candidates))]
    new_value = _sample_value(name, prop, rng)
    mutated = _inject_inline(tree, node_id, prop, new_value)
    return mutated, Mutation(name, node_id, None, f"{prop}: {new_value}", seed)


def _mutate_structure(tree: DomTree, rng, seed: int) -> tuple[bytes, Mutation]:
    candidates = [
        n.id
        for n in tree.nodes
        if n.kind == dom.ELEMENT
        and not n.is_synthetic_root
        and n.tag not in STRUCTURE_EXCLUDED_TAGS
    ]
    if not candidates:
        raise NoTarget("no element eligible for duplication")
    node_id = candidates[rng.randrange(len(candidates))]
    span = tree.subtree_span(node_id)
    snippet = tree.source[span.start : span.end]
    mutated = _splice(tree.source, span.end, span.end, snippet)
    return mutated, Mutation(
        "HtmlStructure", node_id, None, snippet.decode("utf-8", "replace"), seed
    )


# ---------------------------------------------------------------------------
# Group assembly
# ---------------------------------------------------------------------------


def build_group(
    source: bytes | str,
    k: int = 4,
    seed: int = 0,
    renderer: Callable[[bytes], "object"] | None = None,
    categories: Sequence[MutationCategory] = DEFAULT_CATEGORIES,
    retry_budget: int | None = None,
) -> MutantGroup:
    """Assemble up to ``k`` surviving mutants, filtering duplicates,
    render failures, and blank renders.

    ``renderer`` is any object with a ``render(html) -> RenderResult``
    method (see :mod:`waffle.render`); without one, render-based filters
    are skipped.
    """
    if isinstance(source, str):
        source = source.encode("utf-8")
    tree = parse_html(source)  # validates the original up front
    del tree
    budget = 3 * k if retry_budget is None else retry_budget
    master = _rng(seed)
    records: list[MutantRecord] = []
    seen: set[bytes] = {source}
    survivors = 0
    no_target = 0
    for _ in range(budget):
        if survivors >= k:
            break
        cat_seed = master.getrandbits(63)
        mut_seed = master.getrandbits(63)
        category = sample_category(categories, cat_seed)
        try:
            mutated, mutation = mutate(source, category, mut_seed)
        except NoTarget:
            no_target += 1
            continue
        if mutated in seen:
            records.append(MutantRecord(mutated, (mutation,), "duplicate"))
            continue
        status = "ok"
        if renderer is not None:
            result = renderer.render(mutated)
            if result.status == "failed":
                status = "render_failed"
            elif result.status == "blank":
                status = "blank"
        records.append(MutantRecord(mutated, (mutation,), status))
        if status == "ok":
            seen.add(mutated)
            survivors += 1

    warning = None
    if survivors < k:
        warning = (
            f"only {survivors}/{k} mutants survived after {budget} attempts"
            + (f" ({no_target} had no eligible target)" if no_target else "")
        )
    group_id = hashlib.sha256(source + seed.to_bytes(8, "little", signed=True)).hexdigest()[:12]
    return MutantGroup(
        original=source,
        mutants=tuple(records),
        group_id=group_id,
        seed=seed,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


def _mutation_to_obj(m: Mutation) -> dict:
    target = list(m.target) if isinstance(m.target, tuple) else m.target
    return {"category": m.category, "target": target, "old": m.old_value, "new": m.new_value}


def group_to_json(group: MutantGroup) -> str:
    payload = {
        "group_id": group.group_id,
        "original": group.original.decode("utf-8"),
        "mutants": [
            {
                "html": rec.html.decode("utf-8"),
                "mutations": [_mutation_to_obj(m) for m in rec.mutations],
                "status": rec.status,
            }
            for rec in group.mutants
        ],
        "seed": group.seed,
    }
    if group.warning:
        payload["warning"] = group.warning
    return json.dumps(payload)


def group_from_json(text: str) -> MutantGroup:
    obj = json.loads(text)
    mutants = tuple(
        MutantRecord(
            html=rec["html"].encode("utf-8"),
            mutations=tuple(
                Mutation(
                    category=m["category"],
                    target=tuple(m["target"]) if isinstance(m["target"], list) else m["target"],
                    old_value=m["old"],
                    new_value=m["new"],
                    seed=obj["seed"],
                )
                for m in rec["mutations"]
            ),
            status=rec["status"],
        )
        for rec in obj["mutants"]
    )
    return MutantGroup(
        original=obj["original"].encode("utf-8"),
        mutants=mutants,
        group_id=obj["group_id"],
        seed=obj["seed"],
        warning=obj.get("warning"),
    )
