"""Command-line front end.

Exit codes: 0 success, 2 runtime/domain error, 64 usage or configuration
error. Every command prints only its declared payload (paths or CSV) to
stdout; diagnostics go to stderr via logging. All commands are reproducible
from their config plus seed: re-running writes byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataset import DatasetSpec, generate_pairs
from .errors import ConfigError, InvalidInputError, PinholecamError
from .fileio import (
    load_psf,
    read_image,
    save_psf,
    write_image,
    write_mtf_csv,
    write_report_jsonl,
)
from .metrics import psnr, ssim
from .optics import airy_psf, airy_psf_rgb, mtf50, mtf_from_psf
from .restore import RestoreReport, reblur_residual, restore_pipeline, tiled_apply
from .sensor import add_sensor_noise, forward_capture, simulate_pinhole_capture

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of calling sys.exit."""

    def error(self, message):
        raise _UsageError(message)


def _add_common(parser):
    parser.add_argument("--config", help="key=value config file (defaults used if omitted)")
    parser.add_argument(
        "-O",
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value; repeatable",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="pinholecam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_psf = sub.add_parser("psf", help="generate a PSF or compute its MTF")
    psf_sub = p_psf.add_subparsers(dest="psf_command", required=True)

    p_gen = psf_sub.add_parser("gen", help="write the Airy PSF as PFM (+ pitch sidecar)")
    _add_common(p_gen)
    p_gen.add_argument("--out", required=True, help="output PFM path")
    p_gen.add_argument("--size", type=int, help="kernel size (odd, >= 3)")
    p_gen.set_defaults(func=cmd_psf_gen)

    p_mtf = psf_sub.add_parser("mtf", help="write the MTF CSV and print MTF50")
    _add_common(p_mtf)
    p_mtf.add_argument("--psf", help="PSF file; synthesized from config if omitted")
    p_mtf.add_argument("--out", required=True, help="output CSV path")
    p_mtf.add_argument("--size", type=int, help="kernel size when synthesizing")
    p_mtf.set_defaults(func=cmd_psf_mtf)

    p_sim = sub.add_parser("simulate", help="blur + noise + clip a clean image")
    _add_common(p_sim)
    p_sim.add_argument("--in", dest="input", required=True, help="clean input image")
    p_sim.add_argument("--out", required=True, help="output image (PNG or PFM)")
    p_sim.add_argument("--psf", help="PSF file; synthesized from config if omitted")
    p_sim.add_argument("--seed", type=int, help="override the config seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_res = sub.add_parser("restore", help="low-pass + deconvolve a degraded image")
    _add_common(p_res)
    p_res.add_argument("--in", dest="input", required=True, help="degraded input image")
    p_res.add_argument("--psf", help="PSF file; synthesized from config if omitted")
    p_res.add_argument("--out", required=True, help="output image (PNG or PFM)")
    p_res.add_argument("--method", choices=["wiener", "admm"], help="override config method")
    p_res.add_argument("--max-iters", type=int, help="override ADMM iteration cap")
    p_res.add_argument(
        "--report", help="JSON-lines report path (default: <out>.report.jsonl)"
    )
    p_res.set_defaults(func=cmd_restore)

    p_eval = sub.add_parser("evaluate", help="print PSNR/SSIM of a test image vs reference")
    p_eval.add_argument("--ref", required=True, help="reference image")
    p_eval.add_argument("--test", required=True, help="image under test")
    p_eval.set_defaults(func=cmd_evaluate)

    p_data = sub.add_parser("dataset", help="generate clean/degraded training pairs")
    _add_common(p_data)
    p_data.add_argument("--source-dir", help="directory of source images")
    p_data.add_argument("--output-dir", help="directory for pairs + manifest")
    p_data.add_argument("--psf", help="PSF file; synthesized from config if omitted")
    p_data.set_defaults(func=cmd_dataset)

    p_sweep = sub.add_parser("sweep", help="simulate + restore across an ISO or exposure axis")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=["iso", "exposure"])
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--in", dest="input", required=True, help="clean input image")
    p_sweep.add_argument("--out-dir", required=True, help="directory for images + sweep.csv")
    p_sweep.add_argument("--psf", help="PSF file; synthesized from config if omitted")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def _load_config(args) -> RunConfig:
    if args.config is not None:
        return RunConfig.from_file(args.config, overrides=args.override)
    config = RunConfig()
    config.apply_overrides(args.override)
    config.validate()
    return config


def _psf_size(config, args) -> int:
    size = args.size if getattr(args, "size", None) is not None else config.psf_size
    if size % 2 == 0 or size < 3:
        raise ConfigError(f"psf size must be odd and >= 3, got {size}")
    return size


def _build_psf(config, args):
    """Single PSF from a --psf file, or synthesized from the optical config."""
    if getattr(args, "psf", None):
        return load_psf(args.psf)
    return airy_psf(config.to_optical_config(), _psf_size(config, args))


def _simulate(config, image, args, seed):
    """The simulate command's core, shared with sweep (minus the seed choice)."""
    params = config.to_noise_params()
    if config.per_channel_psf and not getattr(args, "psf", None):
        if image.ndim != 3:
            raise InvalidInputError("per_channel_psf requires a 3-channel input")
        psfs = airy_psf_rgb(config.to_optical_config(), _psf_size(config, args))
        blurred = np.stack(
            [forward_capture(image[:, :, c], psfs[c]) for c in range(3)], axis=-1
        )
        noisy = add_sensor_noise(blurred, params, config.exposure_scale, seed)
        return np.clip(noisy, 0.0, config.headroom)
    psf = _build_psf(config, args)
    return simulate_pinhole_capture(
        image, psf, params, exposure_scale=config.exposure_scale, seed=seed
    )


def _restore(config, image, psf):
    """The restore command's core: pipeline, tiled above the size threshold.

    Tiled runs merge diagnostics: iteration trace of the slowest tile, summed
    objective, reblur residual over the full image.
    """
    mpix = image.shape[0] * image.shape[1] / 1e6
    method_params = config.to_method_params()
    optical = config.to_optical_config()
    if mpix <= config.tile_threshold_mpix:
        return restore_pipeline(
            image,
            psf,
            optical,
            method=config.method,
            method_params=method_params,
            taper_width=config.taper_width,
        )

    log.info("tiling %.1f MP input (%d px tiles, %d px overlap)", mpix, config.tile, config.overlap)
    reports = []

    def run_tile(tile):
        restored, report = restore_pipeline(
            tile,
            psf,
            optical,
            method=config.method,
            method_params=method_params,
            taper_width=config.taper_width,
        )
        reports.append(report)
        return restored

    restored = tiled_apply(image, run_tile, tile=config.tile, overlap=config.overlap)
    slowest = max(reports, key=lambda r: r.iterations_run)
    report = RestoreReport(
        iterations_run=slowest.iterations_run,
        final_objective=sum(r.final_objective for r in reports),
        primal_residuals=slowest.primal_residuals,
        dual_residuals=slowest.dual_residuals,
        reblur_mse=reblur_residual(restored, image, psf),
        converged=all(r.converged for r in reports),
    )
    return restored, report


def cmd_psf_gen(args) -> int:
    config = _load_config(args)
    psf = airy_psf(config.to_optical_config(), _psf_size(config, args))
    save_psf(args.out, psf)
    print(args.out)
    return 0


def cmd_psf_mtf(args) -> int:
    config = _load_config(args)
    psf = _build_psf(config, args)
    curve = mtf_from_psf(psf)
    write_mtf_csv(args.out, curve)
    print(repr(mtf50(curve)))
    return 0


def cmd_simulate(args) -> int:
    config = _load_config(args)
    seed = config.seed if args.seed is None else args.seed
    image = read_image(args.input)
    simulated = _simulate(config, image, args, seed)
    write_image(args.out, simulated)
    print(args.out)
    return 0


def cmd_restore(args) -> int:
    config = _load_config(args)
    if args.method is not None:
        config.method = args.method
    if args.max_iters is not None:
        config.max_iters = args.max_iters
    config.validate()
    image = read_image(args.input)
    psf = _build_psf(config, args)
    restored, report = _restore(config, image, psf)
    write_image(args.out, restored)
    report_path = args.report if args.report else f"{args.out}.report.jsonl"
    write_report_jsonl(report_path, report)
    print(args.out)
    return 0


def cmd_evaluate(args) -> int:
    reference = read_image(args.ref)
    test = read_image(args.test)
    print("file,psnr_db,ssim")
    print(f"{args.test},{psnr(reference, test)!r},{ssim(reference, test)!r}")
    return 0


def cmd_dataset(args) -> int:
    config = _load_config(args)
    source_dir = args.source_dir or config.source_dir
    output_dir = args.output_dir or config.output_dir
    if not source_dir:
        raise ConfigError("source_dir is required (flag --source-dir or config)")
    if not output_dir:
        raise ConfigError("output_dir is required (flag --output-dir or config)")
    spec = DatasetSpec(
        source_dir=source_dir,
        output_dir=output_dir,
        psf=_build_psf(config, args),
        iso_choices=config.iso_choices,
        exposure_scales=config.exposure_scales,
        patch_size=config.patch_size,
        patches_per_image=config.patches_per_image,
        seed=config.seed,
    )
    manifest = generate_pairs(spec)
    log.info("wrote %d pairs", len(manifest["pairs"]))
    print(str(Path(output_dir) / "manifest.json"))
    return 0


def _parse_values(axis: str, text: str):
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ConfigError("--values must list at least one value")
    try:
        if axis == "iso":
            return [int(part) for part in items]
        return [float(part) for part in items]
    except ValueError:
        raise ConfigError(f"--values: could not parse {text!r} for axis {axis}") from None


def cmd_sweep(args) -> int:
    """Simulate + restore across the axis values, all else held fixed.

    The iso axis models the fixed-illumination protocol: the light reaching
    the sensor is held constant while gain varies, so exposure_scale is
    compensated by iso/config.iso and read noise stays at its configured
    input-referred level. The exposure axis varies exposure_scale directly at
    the configured ISO. Each axis value gets seed = config.seed + index.
    """
    config = _load_config(args)
    values = _parse_values(args.axis, args.values)
    clean = read_image(args.input)
    psf = _build_psf(config, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = ["value,psnr_db,ssim,reblur_mse"]
    for index, value in enumerate(values):
        run = RunConfig(**vars(config))
        run.seed = config.seed + index
        if args.axis == "iso":
            run.iso = int(value)
            run.exposure_scale = config.exposure_scale * (value / config.iso)
        else:
            run.exposure_scale = float(value)
        run.validate()

        token = f"{float(value):g}"
        simulated = _simulate(run, clean, args, run.seed)
        sim_path = out_dir / f"sim_{token}.png"
        write_image(sim_path, simulated)

        # restore from the written file so a degenerate sweep is bit-identical
        # to running simulate then restore by hand
        degraded = read_image(sim_path)
        restored, report = _restore(run, degraded, psf)
        restored_path = out_dir / f"restored_{token}.png"
        write_image(restored_path, restored)

        rows.append(
            f"{token},{psnr(clean, restored)!r},{ssim(clean, restored)!r},"
            f"{report.reblur_mse!r}"
        )

    csv_text = "\n".join(rows) + "\n"
    (out_dir / "sweep.csv").write_text(csv_text)
    sys.stdout.write(csv_text)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 64
    except PinholecamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
