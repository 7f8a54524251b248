"""Forward capture model: PSF convolution, ISO-dependent sensor noise, RAW prep.

The capture of an object o through a pinhole with PSF P is i = o * P + eta.
Convolution runs per channel with replicate-edge padding so a constant scene
stays constant; noise is photon shot noise plus Gaussian read noise with an
explicit ISO gain of iso/iso_base, all constants exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidArgumentError, InvalidInputError
from .optics import Psf
from .validation import as_stack, check_image, check_positive, from_stack

BAYER_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")

# Where each color sits inside the 2x2 CFA tile, per pattern: (row, col) of
# the red and blue sites; green occupies the remaining two.
_CFA_SITES = {
    "RGGB": ((0, 0), (1, 1)),
    "BGGR": ((1, 1), (0, 0)),
    "GRBG": ((0, 1), (1, 0)),
    "GBRG": ((1, 0), (0, 1)),
}

# Bilinear interpolation kernels: 4-neighbor cross for green, 2/4-neighbor
# (axis + diagonal) for red/blue. Normalization by the convolved site mask
# makes edge handling under replicate padding automatic.
_GREEN_KERNEL = np.array(
    [[0.0, 0.25, 0.0], [0.25, 1.0, 0.25], [0.0, 0.25, 0.0]], dtype=np.float64
)
_REDBLUE_KERNEL = np.array(
    [[0.25, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.25]], dtype=np.float64
)


@dataclass(frozen=True)
class NoiseParams:
    """ISO-indexed shot and read noise parameters.

    full_well_photons is the photon count at signal 1.0 at the base ISO;
    read_sigma_dn is the read-noise standard deviation in normalized signal
    units at the given ISO.
    """

    iso: int
    full_well_photons: float = 10000.0
    iso_base: int = 100
    read_sigma_dn: float = 0.0

    def __post_init__(self):
        if self.iso_base < 1:
            raise InvalidArgumentError(f"NoiseParams.iso_base must be >= 1, got {self.iso_base}")
        if self.iso < self.iso_base:
            raise InvalidArgumentError(
                f"NoiseParams.iso must be >= iso_base ({self.iso_base}), got {self.iso}"
            )
        check_positive(self.full_well_photons, "NoiseParams.full_well_photons")
        if not (math.isfinite(self.read_sigma_dn) and self.read_sigma_dn >= 0):
            raise InvalidArgumentError(
                f"NoiseParams.read_sigma_dn must be >= 0, got {self.read_sigma_dn!r}"
            )

    @property
    def gain(self) -> float:
        return self.iso / self.iso_base

    @classmethod
    def for_iso(
        cls,
        iso: int,
        *,
        read_electrons: float = 2.0,
        full_well_photons: float = 10000.0,
        iso_base: int = 100,
    ) -> "NoiseParams":
        """Parameters with read noise referred from electrons to signal units.

        Full scale at the given ISO corresponds to full_well_photons *
        iso_base / iso photons, so a fixed electron-count read noise grows
        linearly with ISO in signal units.
        """
        read_dn = read_electrons * iso / (full_well_photons * iso_base)
        return cls(
            iso=iso,
            full_well_photons=full_well_photons,
            iso_base=iso_base,
            read_sigma_dn=read_dn,
        )


@dataclass(frozen=True)
class BayerImage:
    """A single-plane color-filter-array capture."""

    data: np.ndarray
    pattern: str
    black_level: float = 0.0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidArgumentError(f"Bayer data must be 2-D, got shape {data.shape}")
        h, w = data.shape
        if h % 2 or w % 2:
            raise InvalidInputError(f"Bayer dimensions must be even, got {h}x{w}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("Bayer data contains NaN or Inf")
        if self.pattern not in BAYER_PATTERNS:
            raise InvalidArgumentError(
                f"unknown Bayer pattern {self.pattern!r}; expected one of {BAYER_PATTERNS}"
            )
        if not (math.isfinite(self.black_level) and self.black_level >= 0):
            raise InvalidArgumentError(
                f"black_level must be >= 0, got {self.black_level!r}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


# ---------------------------------------------------------------------------
# Forward model


def forward_capture(image, psf: Psf):
    """Blur an object image with the PSF: per-channel linear convolution.

    Runs as an FFT convolution over a replicate-edge-padded copy, cropped back
    to the input size, so a constant image is preserved exactly by any
    unit-sum kernel.
    """
    arr = check_image(image, name="object")
    stack, was_2d = as_stack(arr)
    kernel = psf.kernel
    kh, kw = kernel.shape
    h, w = stack.shape[:2]
    if kh > h or kw > w:
        raise InvalidArgumentError(
            f"psf kernel {kh}x{kw} is larger than the image {h}x{w}"
        )
    rh, rw = kh // 2, kw // 2
    padded = np.pad(stack, ((rh, rh), (rw, rw), (0, 0)), mode="edge")
    out = np.empty_like(stack)
    for c in range(stack.shape[2]):
        out[:, :, c] = fftconvolve(padded[:, :, c], kernel, mode="valid")
    return from_stack(out, was_2d)


def add_sensor_noise(image, params: NoiseParams, exposure_scale: float = 1.0, seed: int = 0):
    """Inject photon shot noise and Gaussian read noise.

    Each sample s maps to a photon count s * exposure_scale *
    full_well_photons * iso_base/iso, is Poisson-sampled, and is scaled back
    to signal units before read noise is added. The output is not clipped.

    Sampling draws one uniform and two normals per pixel from a counter-based
    generator in canonical order, so each pixel's outcome depends only on its
    own draws and results are independent of traversal order. Same seed, same
    bits.
    """
    arr = check_image(image, name="image", require_nonnegative=True)
    check_positive(exposure_scale, "exposure_scale")
    scale = exposure_scale * params.full_well_photons * params.iso_base / params.iso
    photons = arr * scale
    rng = np.random.Generator(np.random.Philox(seed))
    uniforms = rng.random(arr.shape)
    shot_normals = rng.standard_normal(arr.shape)
    read_normals = rng.standard_normal(arr.shape)
    counts = _poisson_from_draws(photons, uniforms, shot_normals)
    return counts / scale + params.read_sigma_dn * read_normals


def _poisson_from_draws(mean, uniform, normal):
    # Hybrid sampler: CDF inversion below mean 10, rounded clamped normal
    # approximation above (distributional error < 1% there). Both branches
    # consume only the per-pixel draws passed in.
    counts = np.empty_like(mean)
    small = mean < 10.0
    if small.any():
        counts[small] = _poisson_inversion(mean[small], uniform[small])
    large = ~small
    if large.any():
        m = mean[large]
        counts[large] = np.maximum(np.rint(m + np.sqrt(m) * normal[large]), 0.0)
    return counts


def _poisson_inversion(mean, uniform):
    # Sequential search of the CDF. For mean < 10 the CDF passes 1 - 1e-16
    # well before k = 60; the cap is a safety net, not a truncation in play.
    pmf = np.exp(-mean)
    cdf = pmf.copy()
    counts = np.zeros_like(mean)
    pending = uniform > cdf
    k = 0
    while pending.any() and k < 200:
        k += 1
        pmf *= mean / k
        cdf += pmf
        counts[pending] += 1.0
        pending = uniform > cdf
    return counts


def simulate_pinhole_capture(
    object_image,
    psf: Psf,
    params: NoiseParams,
    exposure_scale: float = 1.0,
    seed: int = 0,
    *,
    headroom: float = 4.0,
):
    """forward_capture, then add_sensor_noise, then clip to [0, headroom]."""
    check_positive(headroom, "headroom")
    blurred = forward_capture(object_image, psf)
    noisy = add_sensor_noise(blurred, params, exposure_scale, seed)
    return np.clip(noisy, 0.0, headroom)


# ---------------------------------------------------------------------------
# RAW preprocessing


def black_level_correct(raw: BayerImage) -> BayerImage:
    """Subtract the black level and clamp at zero."""
    return BayerImage(
        data=np.maximum(raw.data - raw.black_level, 0.0),
        pattern=raw.pattern,
        black_level=0.0,
    )


def demosaic_bilinear(raw: BayerImage):
    """Bilinear demosaic of a black-level-corrected Bayer capture.

    Missing samples are filled with the average of the nearest same-color
    neighbors (cross kernel for green, axis/diagonal kernels for red and
    blue); edges use replicate padding. Returns an (H, W, 3) image.
    """
    from scipy.ndimage import convolve

    if raw.black_level != 0.0:
        raise InvalidInputError(
            "demosaic expects black_level = 0; run black_level_correct first"
        )
    data = raw.data
    (red_r, red_c), (blue_r, blue_c) = _CFA_SITES[raw.pattern]
    masks = {}
    for name, (r0, c0) in (("r", (red_r, red_c)), ("b", (blue_r, blue_c))):
        mask = np.zeros(data.shape, dtype=np.float64)
        mask[r0::2, c0::2] = 1.0
        masks[name] = mask
    masks["g"] = 1.0 - masks["r"] - masks["b"]

    planes = []
    for name, kernel in (("r", _REDBLUE_KERNEL), ("g", _GREEN_KERNEL), ("b", _REDBLUE_KERNEL)):
        mask = masks[name]
        num = convolve(data * mask, kernel, mode="nearest")
        den = convolve(mask, kernel, mode="nearest")
        planes.append(num / den)
    return np.stack(planes, axis=-1)
