"""Complex-wavelet structural similarity over a complex steerable pyramid.

Both images are converted to grayscale, rescaled to a common size, and
decomposed into ``levels x orientations`` complex subbands by the standard
octave-bandwidth steerable pyramid (raised-cosine radial filters and
``cos^(K-1)`` angular filters applied in the DFT domain, with the lowpass
residual subsampled between levels).  Per 7x7 sliding window the similarity

    S = (2 * |sum(c_a * conj(c_b))| + K) / (sum|c_a|^2 + sum|c_b|^2 + K)

is averaged over windows, then uniformly over subbands.  With the default
stabilizer K = 0, windows where both images have zero coefficient energy
score 1 (identical-content convention, the K -> 0 limit of the stabilized
ratio).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import Image, to_gray

__all__ = ["CwssimParams", "cw_ssim", "build_complex_pyramid"]


@dataclass(frozen=True)
class CwssimParams:
    size: tuple[int, int] = (256, 256)  # (width, height) both images are scaled to
    levels: int = 4
    orientations: int = 6
    window: int = 7
    stabilizer: float = 0.0

    def __post_init__(self) -> None:
        if self.levels < 1 or self.orientations < 1 or self.window < 1:
            raise ValueError("levels, orientations and window must be >= 1")
        smallest = min(self.size) // (2 ** (self.levels - 1))
        if smallest < self.window:
            raise ValueError(
                f"coarsest subband ({smallest}px) is smaller than the "
                f"{self.window}px window; reduce levels or enlarge size"
            )


# ---------------------------------------------------------------------------
# Complex steerable pyramid (recursive, lowpass subsampled per level)
# ---------------------------------------------------------------------------


def _polar_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """log2-radius and angle grids for an fftshifted spectrum.

    Radius 1 is the Nyquist ring; the DC bin borrows its neighbor's radius
    so the log is finite.
    """
    ys = (np.arange(h) - h // 2) / (h / 2)
    xs = (np.arange(w) - w // 2) / (w / 2)
    xv, yv = np.meshgrid(xs, ys)
    rad = np.hypot(xv, yv)
    rad[h // 2, w // 2] = rad[h // 2, w // 2 - 1]
    return np.log2(rad), np.arctan2(yv, xv)


def _highpass(log_rad: np.ndarray, shift: float) -> np.ndarray:
    """Raised-cosine edge rising over log2(r) in [-1 - shift, -shift]."""
    x = np.clip(log_rad + shift, -1.0, 0.0)
    return np.cos(pi * x / 2.0)


def _lowpass(log_rad: np.ndarray, shift: float) -> np.ndarray:
    x = np.clip(log_rad + shift, -1.0, 0.0)
    return np.cos(pi * (x + 1.0) / 2.0)


def _angle_masks(angle: np.ndarray, orientations: int) -> list[np.ndarray]:
    order = orientations - 1
    const = (
        (2.0 ** (2 * order))
        * (factorial(order) ** 2)
        / (orientations * factorial(2 * order))
    )
    masks = []
    for b in range(orientations):
        theta = np.mod(angle - pi * b / orientations + pi, 2 * pi) - pi
        masks.append(
            2.0
            * np.sqrt(const)
            * (np.cos(theta) ** order)
            * (np.abs(theta) < pi / 2)
        )
    return masks


def _crop_bounds(dims: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    d = np.array(dims)
    start = (np.ceil((d + 0.5) / 2) - np.ceil((np.ceil((d - 0.5) / 2) + 0.5) / 2)).astype(int)
    end = start + np.ceil((d - 0.5) / 2).astype(int)
    return start, end


def build_complex_pyramid(
    gray: np.ndarray, levels: int, orientations: int
) -> list[list[np.ndarray]]:
    """Complex subbands indexed [level][orientation], finest level first."""
    h, w = gray.shape
    log_rad, angle = _polar_grid(h, w)
    dft = np.fft.fftshift(np.fft.fft2(gray))
    lodft = dft * _lowpass(log_rad, 0.0)
    cfactor = (-1j) ** (orientations - 1)

    bands: list[list[np.ndarray]] = []
    for level in range(1, levels + 1):
        himask = _highpass(log_rad, float(level))
        level_bands = []
        for anglemask in _angle_masks(angle, orientations):
            banddft = lodft * himask * anglemask * cfactor
            level_bands.append(np.fft.ifft2(np.fft.ifftshift(banddft)))
        bands.append(level_bands)
        if level < levels:
            start, end = _crop_bounds(lodft.shape)
            log_rad = log_rad[start[0] : end[0], start[1] : end[1]]
            angle = angle[start[0] : end[0], start[1] : end[1]]
            lodft = lodft[start[0] : end[0], start[1] : end[1]]
            lodft = lodft * _lowpass(log_rad, float(level))
    return bands


# ---------------------------------------------------------------------------
# Windowed similarity
# ---------------------------------------------------------------------------


def _window_sums(arr: np.ndarray, window: int) -> np.ndarray:
    views = sliding_window_view(arr, (window, window))
    return views.sum(axis=(-2, -1))


def _subband_score(
    band_a: np.ndarray, band_b: np.ndarray, window: int, stabilizer: float
) -> float:
    cross = _window_sums(band_a * np.conj(band_b), window)
    energy_a = _window_sums(np.abs(band_a) ** 2, window)
    energy_b = _window_sums(np.abs(band_b) ** 2, window)
    num = 2.0 * np.abs(cross) + stabilizer
    den = energy_a + energy_b + stabilizer
    scores = np.ones_like(den)
    busy = den > 0
    scores[busy] = num[busy] / den[busy]
    return float(scores.mean())


def cw_ssim(a: Image, b: Image, params: CwssimParams | None = None) -> float:
    """Mean windowed complex-wavelet similarity in [0, 1]."""
    params = params or CwssimParams()
    gray_a = to_gray(a, params.size)
    gray_b = to_gray(b, params.size)
    # A constant image has all-zero subband coefficients; two of them are
    # structurally identical (the K -> 0 limit of K/K), but FFT roundoff
    # leaves ~1e-13 residue, so the rule is applied on the inputs.
    if gray_a.min() == gray_a.max() and gray_b.min() == gray_b.max():
        return 1.0
    pyr_a = build_complex_pyramid(gray_a, params.levels, params.orientations)
    pyr_b = build_complex_pyramid(gray_b, params.levels, params.orientations)
    subband_means = [
        _subband_score(band_a, band_b, params.window, params.stabilizer)
        for level_a, level_b in zip(pyr_a, pyr_b)
        for band_a, band_b in zip(level_a, level_b)
    ]
    return float(np.mean(subband_means))
