"""Toolkit for DOM-structured attention masks, HTML mutation groups,
contrastive-loss reference math, and webpage similarity metrics."""

from . import errors
from .attention import (
    UNBOUNDED,
    AttnMaskSet,
    MaskConfig,
    build_mask,
    export_mask,
    import_mask,
    mask_stats,
    prompt_only_mask,
)
from .dom import DomNode, DomTree, parse_html, serialize, strip_presentation, to_debug_json
from .loss import (
    GroupBatch,
    SamplePair,
    combined_loss,
    contrastive_grad,
    contrastive_loss,
    lm_loss,
    mean_embeddings,
)
from .metrics import (
    CwssimParams,
    Image,
    LlemScore,
    TextBlock,
    clip_cosine,
    cw_ssim,
    html_match,
    llem,
)
from .mutate import (
    DEFAULT_CATEGORIES,
    MutantGroup,
    Mutation,
    MutationCategory,
    build_group,
    mutate,
    sample_category,
)
from .render import RenderResult, WebDriverClient, render_many
from .tokens import PREFIX, TokenAlignment, align, reference_tokenize

__version__ = "0.1.0"

__all__ = [
    "errors",
    "UNBOUNDED",
    "AttnMaskSet",
    "MaskConfig",
    "build_mask",
    "export_mask",
    "import_mask",
    "mask_stats",
    "prompt_only_mask",
    "DomNode",
    "DomTree",
    "parse_html",
    "serialize",
    "strip_presentation",
    "to_debug_json",
    "GroupBatch",
    "SamplePair",
    "combined_loss",
    "contrastive_grad",
    "contrastive_loss",
    "lm_loss",
    "mean_embeddings",
    "CwssimParams",
    "Image",
    "LlemScore",
    "TextBlock",
    "clip_cosine",
    "cw_ssim",
    "html_match",
    "llem",
    "DEFAULT_CATEGORIES",
    "MutantGroup",
    "Mutation",
    "MutationCategory",
    "build_group",
    "mutate",
    "sample_category",
    "RenderResult",
    "WebDriverClient",
    "render_many",
    "PREFIX",
    "TokenAlignment",
    "align",
    "reference_tokenize",
    "__version__",
]
