"""Plain RGB8 image value type plus PNG and grayscale helpers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from ..errors import DegenerateImage

__all__ = ["Image", "load_png", "save_png", "to_gray", "is_blank"]

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    pixels: bytes  # row-major RGB8, len = 3 * width * height

    def __post_init__(self) -> None:
        if len(self.pixels) != 3 * self.width * self.height:
            raise ValueError(
                f"pixel buffer has {len(self.pixels)} bytes, "
                f"expected {3 * self.width * self.height}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = np.stack([arr] * 3, axis=-1)
        h, w, _ = arr.shape
        return cls(width=w, height=h, pixels=arr.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )


def load_png(path: str | Path) -> Image:
    with PILImage.open(path) as img:
        rgb = img.convert("RGB")
        return Image(width=rgb.width, height=rgb.height, pixels=rgb.tobytes())


def save_png(image: Image, path: str | Path) -> None:
    PILImage.frombytes("RGB", (image.width, image.height), image.pixels).save(
        path, format="PNG"
    )


def to_gray(image: Image, size: tuple[int, int] | None = None) -> np.ndarray:
    """Rec. 601 grayscale as float64, optionally bilinearly resized."""
    if image.width == 0 or image.height == 0:
        raise DegenerateImage("image has zero area")
    arr = image.to_array().astype(np.float64)
    gray = arr @ _LUMA
    if size is not None and (image.width, image.height) != size:
        pil = PILImage.fromarray(gray)
        pil = pil.resize(size, resample=PILImage.BILINEAR)
        gray = np.asarray(pil, dtype=np.float64)
    return gray


def is_blank(image: Image) -> bool:
    """True iff every pixel equals every other pixel exactly."""
    arr = image.to_array()
    return bool((arr == arr.reshape(-1, 3)[0]).all())
