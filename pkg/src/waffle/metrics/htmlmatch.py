"""Pixel-exact page equality after stripping styles and attributes."""

from __future__ import annotations

from ..dom import parse_html, strip_presentation
from ..errors import RenderError

__all__ = ["html_match"]


def html_match(
    gt: bytes | str,
    gen: bytes | str,
    renderer,
    viewport: tuple[int, int] = (1280, 720),
) -> bool:
    """True iff the stripped documents render to identical images.

    ``renderer`` is any object with ``render(html, viewport=...) ->
    RenderResult`` (see :mod:`waffle.render`).  Render failures propagate
    as :class:`RenderError`.
    """
    stripped_gt = strip_presentation(parse_html(gt))
    stripped_gen = strip_presentation(parse_html(gen))

    result_gt = renderer.render(stripped_gt, viewport=viewport)
    if result_gt.status == "failed":
        raise RenderError(f"ground-truth render failed: {result_gt.reason}")
    result_gen = renderer.render(stripped_gen, viewport=viewport)
    if result_gen.status == "failed":
        raise RenderError(f"generated render failed: {result_gen.reason}")

    img_a, img_b = result_gt.image, result_gen.image
    if (img_a.width, img_a.height) != (img_b.width, img_b.height):
        return False
    return img_a.pixels == img_b.pixels
