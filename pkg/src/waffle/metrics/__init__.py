"""Webpage similarity metrics: HTML-Match, CW-SSIM, LLEM, embedding cosine."""

from .clip import clip_cosine
from .cwssim import CwssimParams, build_complex_pyramid, cw_ssim
from .htmlmatch import html_match
from .image import Image, is_blank, load_png, save_png, to_gray
from .llem import LlemScore, TextBlock, llem, text_similarity

__all__ = [
    "clip_cosine",
    "CwssimParams",
    "build_complex_pyramid",
    "cw_ssim",
    "html_match",
    "Image",
    "is_blank",
    "load_png",
    "save_png",
    "to_gray",
    "LlemScore",
    "TextBlock",
    "llem",
    "text_similarity",
]
