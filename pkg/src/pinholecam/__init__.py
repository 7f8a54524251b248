"""Pinhole-camera image formation and restoration.

Simulates diffraction-limited capture through a circular pinhole (Airy PSF,
photon shot + read noise, RAW preprocessing) and restores the result with a
diffraction-matched ideal low-pass followed by Wiener or ADMM-TV
deconvolution, with PSNR/SSIM metrics and a training-pair generator on top.
"""

from .config import RunConfig
from .dataset import DatasetSpec, generate_pairs
from .errors import (
    ConfigError,
    DivergenceError,
    IllConditionedError,
    InvalidArgumentError,
    InvalidInputError,
    NotFoundError,
    ParseError,
    PinholecamError,
)
from .fileio import (
    append_report_jsonl,
    load_bayer,
    load_manifest,
    load_psf,
    psf_sha256,
    quantize_like_png,
    read_image,
    read_pfm,
    save_bayer,
    save_psf,
    validate_png,
    write_image,
    write_mtf_csv,
    write_pfm,
    write_report_jsonl,
)
from .metrics import QualityScore, psnr, score, ssim
from .optics import (
    CHANNEL_WAVELENGTHS,
    J1_FIRST_ZERO,
    MtfCurve,
    OpticalConfig,
    Psf,
    airy_disk_width,
    airy_psf,
    airy_psf_rgb,
    bessel_j1,
    diffraction_cutoff,
    diffraction_cutoff_cpp,
    measure_first_zero_radius,
    merge_exposure_stack,
    mtf50,
    mtf_from_kernel,
    mtf_from_psf,
    normalize_psf,
)
from .restore import (
    AdmmParams,
    RestoreReport,
    WienerParams,
    admm_tv_deconvolve,
    context_pad_width,
    edge_taper,
    ideal_lowpass,
    reblur_residual,
    restore_pipeline,
    tiled_apply,
    wiener_deconvolve,
    wiener_nsr_estimate,
)
from .sensor import (
    BAYER_PATTERNS,
    BayerImage,
    NoiseParams,
    add_sensor_noise,
    black_level_correct,
    demosaic_bilinear,
    forward_capture,
    simulate_pinhole_capture,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmParams",
    "BAYER_PATTERNS",
    "BayerImage",
    "CHANNEL_WAVELENGTHS",
    "ConfigError",
    "DatasetSpec",
    "DivergenceError",
    "IllConditionedError",
    "InvalidArgumentError",
    "InvalidInputError",
    "J1_FIRST_ZERO",
    "MtfCurve",
    "NoiseParams",
    "NotFoundError",
    "OpticalConfig",
    "ParseError",
    "PinholecamError",
    "Psf",
    "QualityScore",
    "RestoreReport",
    "RunConfig",
    "WienerParams",
    "add_sensor_noise",
    "admm_tv_deconvolve",
    "airy_disk_width",
    "airy_psf",
    "airy_psf_rgb",
    "append_report_jsonl",
    "bessel_j1",
    "black_level_correct",
    "context_pad_width",
    "demosaic_bilinear",
    "diffraction_cutoff",
    "diffraction_cutoff_cpp",
    "edge_taper",
    "forward_capture",
    "generate_pairs",
    "ideal_lowpass",
    "load_bayer",
    "load_manifest",
    "load_psf",
    "measure_first_zero_radius",
    "merge_exposure_stack",
    "mtf50",
    "mtf_from_kernel",
    "mtf_from_psf",
    "normalize_psf",
    "psf_sha256",
    "psnr",
    "quantize_like_png",
    "read_image",
    "read_pfm",
    "reblur_residual",
    "restore_pipeline",
    "save_bayer",
    "save_psf",
    "score",
    "simulate_pinhole_capture",
    "ssim",
    "tiled_apply",
    "validate_png",
    "wiener_deconvolve",
    "wiener_nsr_estimate",
    "write_image",
    "write_mtf_csv",
    "write_pfm",
    "write_report_jsonl",
]
