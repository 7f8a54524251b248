"""Full-reference image quality metrics: PSNR and single-scale SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidInputError
from .validation import as_stack, check_image, check_positive, check_same_shape

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityScore:
    """PSNR (dB, may be inf) and SSIM for one image pair."""

    psnr_db: float
    ssim: float


def psnr(a, b, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); returns inf for identical images."""
    x = check_image(a, name="a")
    y = check_image(b, name="b")
    check_same_shape(x, y, names=("a", "b"))
    check_positive(peak, "peak")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def _gaussian_window() -> np.ndarray:
    radius = _SSIM_WINDOW // 2
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(coords**2) / (2.0 * _SSIM_SIGMA**2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(a, b, peak: float = 1.0) -> float:
    """Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03.

    Local statistics are Gaussian-weighted, the SSIM map is averaged over all
    fully valid window positions, and channels are averaged. Result clamped to
    [-1, 1] against float residue.
    """
    x = check_image(a, name="a")
    y = check_image(b, name="b")
    check_same_shape(x, y, names=("a", "b"))
    check_positive(peak, "peak")
    xs, _ = as_stack(x)
    ys, _ = as_stack(y)
    h, w = xs.shape[:2]
    if min(h, w) < _SSIM_WINDOW:
        raise InvalidInputError(
            f"image {h}x{w} is smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window"
        )
    window = _gaussian_window()
    c1 = (_SSIM_K1 * peak) ** 2
    c2 = (_SSIM_K2 * peak) ** 2

    def local_mean(plane):
        return fftconvolve(plane, window, mode="valid")

    values = []
    for c in range(xs.shape[2]):
        xc = xs[:, :, c]
        yc = ys[:, :, c]
        mu_x = local_mean(xc)
        mu_y = local_mean(yc)
        var_x = local_mean(xc * xc) - mu_x * mu_x
        var_y = local_mean(yc * yc) - mu_y * mu_y
        cov = local_mean(xc * yc) - mu_x * mu_y
        score_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
            (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        )
        values.append(float(score_map.mean()))
    return float(np.clip(np.mean(values), -1.0, 1.0))


def score(a, b, peak: float = 1.0) -> QualityScore:
    """Both metrics for one pair."""
    return QualityScore(psnr_db=psnr(a, b, peak), ssim=ssim(a, b, peak))
