"""Shared fixtures: deterministic synthetic scenes and small reference kernels.

The benchmark scenes are generated procedurally from fixed seeds so the repo
ships no binary image assets; every test that consumes them sees the exact
same pixel data on every run and platform (Philox-backed Generator, float64).
"""

import warnings

import numpy as np
import pytest

from pinholecam import NoiseParams, OpticalConfig, airy_psf, simulate_pinhole_capture

# A 3x3 kernel whose transfer function stays well away from zero everywhere
# (min |H| ~ 0.72), safe for nsr=0 inverse filtering. The obvious binomial
# [1,2,1] kernel is NOT usable here: it has an exact zero at Nyquist.
WELL_CONDITIONED_3X3 = np.array(
    [[0.02, 0.03, 0.02], [0.03, 0.80, 0.03], [0.02, 0.03, 0.02]], dtype=np.float64
)
WELL_CONDITIONED_3X3 /= WELL_CONDITIONED_3X3.sum()


def make_scene(index: int, size: int = 256) -> np.ndarray:
    """One synthetic test scene in [0, 1], deterministic in (index, size).

    Five scene families cycle with the index: shaded gradient with disks,
    1/f noise texture, checkerboard, bar chart, and smooth Gaussian bumps.
    Edges, texture, and flat areas are all represented across any ten
    consecutive scenes.
    """
    rng = np.random.default_rng(1000 + index)
    kind = index % 5
    yy, xx = np.meshgrid(
        np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij"
    )
    if kind == 0:
        image = 0.2 + 0.5 * xx + 0.2 * yy
        for _ in range(4):
            cy, cx = rng.uniform(0.15, 0.85, size=2)
            radius = rng.uniform(0.06, 0.18)
            value = rng.uniform(0.6, 0.95)
            image = np.where(np.hypot(yy - cy, xx - cx) < radius, value, image)
        return image
    if kind == 1:
        # 1/f spectrum noise: natural-image-like texture
        freq = np.fft.fftfreq(size)
        rad = np.hypot(freq[:, None], freq[None, :])
        rad[0, 0] = 1.0
        spec = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / rad
        spec[0, 0] = 0.0
        field = np.fft.ifft2(spec).real
        field = (field - field.min()) / (field.max() - field.min())
        return 0.05 + 0.9 * field
    if kind == 2:
        period = rng.integers(48, 96)
        return 0.25 + 0.5 * (
            ((np.arange(size)[:, None] // period) + (np.arange(size)[None, :] // period)) % 2
        ).astype(np.float64)
    if kind == 3:
        period = rng.integers(40, 80)
        return 0.2 + 0.6 * ((np.arange(size)[None, :] // period) % 2).astype(np.float64) * np.ones(
            (size, 1)
        )
    image = np.full((size, size), 0.15)
    for _ in range(6):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        sigma = rng.uniform(0.04, 0.12)
        amp = rng.uniform(0.3, 0.7)
        image = image + amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    return np.clip(image, 0.0, 1.0)


def make_scenes(count: int = 10, size: int = 256) -> list:
    return [make_scene(i, size) for i in range(count)]


@pytest.fixture(scope="session")
def default_optics() -> OpticalConfig:
    with warnings.catch_warnings():
        # the stock geometry sits inside the far-field margin by design
        warnings.simplefilter("ignore", RuntimeWarning)
        return OpticalConfig()


@pytest.fixture(scope="session")
def default_psf(default_optics):
    return airy_psf(default_optics, 161)


@pytest.fixture(scope="session")
def benchmark_scenes():
    """The ten 256x256 scenes used by the end-to-end benchmarks."""
    return make_scenes(10, 256)


@pytest.fixture(scope="session")
def benchmark_degraded(benchmark_scenes, default_psf):
    """ISO-3200, exposure 1 captures of the benchmark scenes, seeds 100+i."""
    params = NoiseParams.for_iso(3200)
    return [
        simulate_pinhole_capture(scene, default_psf, params, exposure_scale=1.0, seed=100 + i)
        for i, scene in enumerate(benchmark_scenes)
    ]
