"""Structure-aware causal attention masks derived from the DOM tree.

For a query token with owning node ``u`` and a key token with owning node
``w`` at position ``j <= i``, the structural mask allows the pair iff exactly
one of four conditions holds:

* self:    ``w == u`` (all previous tokens of the same node, tags included);
* parent:  ``w`` is an ancestor of ``u`` within ``ancestor_depth`` steps and
  the key is among ``w``'s own (tag) tokens;
* sibling: ``w`` is a preceding sibling of ``u`` under the same parent and
  the key is among ``w``'s own tokens — the sibling's subtree stays hidden;
* prompt:  the key lies in the prompt region (image/instruction tokens).

Tokens owned by the document prefix (doctype, leading whitespace) form a
pseudo-node: they see each other and the prompt, and nothing sees them.
The remaining heads of every layer keep full causal attention; only the
first ``ceil(structural_fraction * n_heads)`` head indices are structural.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from pathlib import Path

import numpy as np

from .dom import DomTree
from .errors import AlignmentMismatch, MaskFormatError
from .tokens import PREFIX, TokenAlignment

__all__ = [
    "UNBOUNDED",
    "CATEGORY_NAMES",
    "MaskConfig",
    "AttnMaskSet",
    "build_mask",
    "prompt_only_mask",
    "export_mask",
    "import_mask",
    "mask_stats",
    "structural_head_count",
]

UNBOUNDED = None  # ancestor_depth value: attend to every ancestor

# provenance byte values
_NONE, _SELF, _PARENT, _SIBLING, _PROMPT = 0, 1, 2, 3, 4
CATEGORY_NAMES = {_SELF: "self", _PARENT: "parent", _SIBLING: "sibling", _PROMPT: "prompt"}

_MAGIC = b"WAFM"
_VERSION = 1

STRUCTURAL = "structural"
FULL = "full"


def structural_head_count(structural_fraction: Fraction, n_heads: int) -> int:
    return int(ceil(structural_fraction * n_heads))


@dataclass(frozen=True)
class MaskConfig:
    n_heads: int = 8
    structural_fraction: Fraction = Fraction(1, 4)
    ancestor_depth: int | None = 1  # None (UNBOUNDED) or a positive depth
    prompt_visible: bool = True
    n_layers: int = 1

    def __post_init__(self) -> None:
        frac = Fraction(self.structural_fraction)
        object.__setattr__(self, "structural_fraction", frac)
        if not (0 < frac <= 1):
            raise ValueError("structural_fraction must be in (0, 1]")
        if self.n_heads < 1:
            raise ValueError("n_heads must be >= 1")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.ancestor_depth is not None and self.ancestor_depth < 1:
            raise ValueError("ancestor_depth must be UNBOUNDED or >= 1")

    @property
    def n_structural_heads(self) -> int:
        return structural_head_count(self.structural_fraction, self.n_heads)


@dataclass(frozen=True)
class AttnMaskSet:
    n_tokens: int
    structural_mask: np.ndarray  # bool (n, n); row = query, col = key
    head_map: tuple[tuple[str, ...], ...]  # per layer, per head
    n_prompt: int
    config: MaskConfig
    provenance: np.ndarray | None = None  # uint8 (n, n), debug form only

    def __post_init__(self) -> None:
        self.structural_mask.setflags(write=False)
        if self.provenance is not None:
            self.provenance.setflags(write=False)

    def same_mask(self, other: "AttnMaskSet") -> bool:
        return (
            self.n_tokens == other.n_tokens
            and self.n_prompt == other.n_prompt
            and self.head_map == other.head_map
            and bool(np.array_equal(self.structural_mask, other.structural_mask))
        )


def _head_map(config: MaskConfig) -> tuple[tuple[str, ...], ...]:
    s = config.n_structural_heads
    layer = (STRUCTURAL,) * s + (FULL,) * (config.n_heads - s)
    return (layer,) * config.n_layers


def _node_relations(tree: DomTree, ancestor_depth: int | None) -> np.ndarray:
    """Relation category for every (query-node, key-node) pair.

    Index len(nodes) stands for the PREFIX pseudo-node.
    """
    n_nodes = len(tree.nodes)
    rel = np.zeros((n_nodes + 1, n_nodes + 1), dtype=np.uint8)
    np.fill_diagonal(rel, _SELF)
    for node in tree.nodes:
        depth = 0
        parent = node.parent
        while parent is not None and (ancestor_depth is None or depth < ancestor_depth):
            rel[node.id, parent] = _PARENT
            parent = tree.nodes[parent].parent
            depth += 1
        if node.parent is not None:
            siblings = tree.nodes[node.parent].children
            for w in siblings[: node.sibling_index]:
                rel[node.id, w] = _SIBLING
    return rel


def build_mask(
    tree: DomTree, alignment: TokenAlignment, config: MaskConfig | None = None
) -> AttnMaskSet:
    """Build the per-token structural mask and the per-layer head assignment."""
    config = config or MaskConfig()
    if alignment.source_length != len(tree.source):
        raise AlignmentMismatch(
            f"alignment covers {alignment.source_length} bytes, "
            f"tree source has {len(tree.source)}"
        )
    n_nodes = len(tree.nodes)
    if any(v != PREFIX and not (0 <= v < n_nodes) for v in alignment.node_of):
        raise AlignmentMismatch("alignment references node ids outside this tree")

    n = alignment.n_total
    n_prompt = alignment.n_prompt
    rel = _node_relations(tree, config.ancestor_depth)
    tok_nodes = np.array(
        [n_nodes if v == PREFIX else v for v in alignment.node_of], dtype=np.intp
    )

    prov = np.zeros((n, n), dtype=np.uint8)
    if len(tok_nodes):
        prov[n_prompt:, n_prompt:] = rel[np.ix_(tok_nodes, tok_nodes)]
    if config.prompt_visible and n_prompt:
        prov[:, :n_prompt] = _PROMPT
    prov[~np.tri(n, dtype=bool)] = 0  # causal: keys after the query are dropped

    return AttnMaskSet(
        n_tokens=n,
        structural_mask=prov > 0,
        head_map=_head_map(config),
        n_prompt=n_prompt,
        config=config,
        provenance=prov,
    )


def prompt_only_mask(n_prompt: int, config: MaskConfig | None = None) -> AttnMaskSet:
    """Degenerate mask for a prompt with no HTML tokens."""
    config = config or MaskConfig()
    prov = np.zeros((n_prompt, n_prompt), dtype=np.uint8)
    if config.prompt_visible:
        prov[np.tri(n_prompt, dtype=bool)] = _PROMPT
    return AttnMaskSet(
        n_tokens=n_prompt,
        structural_mask=prov > 0,
        head_map=_head_map(config),
        n_prompt=n_prompt,
        config=config,
        provenance=prov,
    )


# ---------------------------------------------------------------------------
# Bit-exact export format
# ---------------------------------------------------------------------------
# magic "WAFM", version u16 LE, n_tokens u32 LE, then the lower triangle in
# row-major order (row i contributes i+1 bits), packed little-endian within
# bytes and zero-padded to a byte boundary once at the end of the mask.


def _triangle_bits(mask: np.ndarray) -> np.ndarray:
    n = mask.shape[0]
    rows = [mask[i, : i + 1] for i in range(n)]
    if not rows:
        return np.zeros(0, dtype=bool)
    return np.concatenate(rows)


def export_mask(mask: AttnMaskSet, path: str | Path) -> Path:
    """Write the binary mask plus a JSON sidecar at ``<path>.json``."""
    path = Path(path)
    bits = _triangle_bits(np.asarray(mask.structural_mask, dtype=bool))
    payload = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, mask.n_tokens))
        fh.write(payload)
    sidecar = {
        "n_heads": mask.config.n_heads,
        "structural_fraction": str(mask.config.structural_fraction),
        "ancestor_depth": (
            "unbounded" if mask.config.ancestor_depth is None else mask.config.ancestor_depth
        ),
        "head_map": [list(layer) for layer in mask.head_map],
        "n_prompt": mask.n_prompt,
        "prompt_visible": mask.config.prompt_visible,
    }
    with open(path.with_name(path.name + ".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return path


def import_mask(path: str | Path) -> AttnMaskSet:
    """Re-read an exported mask; provenance is not stored in the file."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise MaskFormatError(f"{path}: bad magic {raw[:4]!r}")
    version, n = struct.unpack_from("<HI", raw, 4)
    if version != _VERSION:
        raise MaskFormatError(f"{path}: unsupported version {version}")
    n_bits = n * (n + 1) // 2
    payload = np.frombuffer(raw[10:], dtype=np.uint8)
    if payload.size * 8 < n_bits:
        raise MaskFormatError(f"{path}: truncated payload for {n} tokens")
    bits = np.unpackbits(payload, bitorder="little")[:n_bits].astype(bool)
    mask = np.zeros((n, n), dtype=bool)
    offset = 0
    for i in range(n):
        mask[i, : i + 1] = bits[offset : offset + i + 1]
        offset += i + 1

    with open(path.with_name(path.name + ".json"), encoding="utf-8") as fh:
        sidecar = json.load(fh)
    depth = sidecar["ancestor_depth"]
    config = MaskConfig(
        n_heads=int(sidecar["n_heads"]),
        structural_fraction=Fraction(sidecar["structural_fraction"]),
        ancestor_depth=None if depth == "unbounded" else int(depth),
        prompt_visible=bool(sidecar.get("prompt_visible", True)),
        n_layers=len(sidecar["head_map"]),
    )
    return AttnMaskSet(
        n_tokens=n,
        structural_mask=mask,
        head_map=tuple(tuple(layer) for layer in sidecar["head_map"]),
        n_prompt=int(sidecar["n_prompt"]),
        config=config,
        provenance=None,
    )


def mask_stats(mask: AttnMaskSet) -> dict:
    """Density over the lower triangle plus per-category cell counts."""
    n = mask.n_tokens
    cells = n * (n + 1) // 2
    allowed = int(np.tril(mask.structural_mask).sum())
    stats: dict = {"density": (allowed / cells) if cells else 0.0, "allowed": allowed}
    if mask.provenance is not None:
        tril = np.tril(mask.provenance)
        stats["categories"] = {
            name: int((tril == code).sum()) for code, name in CATEGORY_NAMES.items()
        }
    return stats
