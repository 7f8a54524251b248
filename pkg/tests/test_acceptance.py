"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete. Each criterion re-derives its expected values through an
independent route (closed-form optics, shift-and-add convolution, analytic
noise variance, explicit circular blur) rather than trusting the code under
test, and carries the wall-clock budget it must finish inside.
"""

import json
import time
import warnings

import numpy as np

from pinholecam import (
    AdmmParams,
    NoiseParams,
    OpticalConfig,
    Psf,
    WienerParams,
    add_sensor_noise,
    admm_tv_deconvolve,
    airy_disk_width,
    airy_psf,
    context_pad_width,
    edge_taper,
    forward_capture,
    ideal_lowpass,
    measure_first_zero_radius,
    mtf50,
    mtf_from_kernel,
    psnr,
    quantize_like_png,
    read_image,
    reblur_residual,
    restore_pipeline,
    simulate_pinhole_capture,
    ssim,
    wiener_deconvolve,
    write_image,
)
from pinholecam.cli import main
from pinholecam.dataset import DatasetSpec, generate_pairs

from conftest import WELL_CONDITIONED_3X3, make_scene

J1_FIRST_ZERO = 3.8317059702075125

BUDGETS = {1: 10.0, 2: 30.0, 3: 20.0, 4: 30.0, 5: 300.0, 6: 60.0, 7: 300.0, 8: 300.0}


def conclude(number: int, ok: bool, detail: str, started: float):
    elapsed = time.perf_counter() - started
    in_budget = elapsed < BUDGETS[number]
    verdict = "PASS" if ok and in_budget else "FAIL"
    line = (
        f"criterion {number}: {verdict} - {detail} "
        f"({elapsed:.1f} s, budget {BUDGETS[number]:.0f} s)"
    )
    print(line)
    assert ok and in_budget, line


def conv_shift_oracle(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Linear convolution over an edge-padded copy, by shift and add."""
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    h, w = image.shape
    padded = np.pad(image, ((rh, rh), (rw, rw)), mode="edge")
    out = np.zeros_like(image)
    for a in range(kh):
        for b in range(kw):
            out += kernel[a, b] * padded[kh - 1 - a : kh - 1 - a + h, kw - 1 - b : kw - 1 - b + w]
    return out


def conv_scalar_oracle(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Same convolution as a per-pixel loop with clamped indices."""
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    h, w = image.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    sy = min(max(y + rh - a, 0), h - 1)
                    sx = min(max(x + rw - b, 0), w - 1)
                    acc += kernel[a, b] * image[sy, sx]
            out[y, x] = acc
    return out


def circular_blur_oracle(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Circular convolution via an explicitly placed wrapped kernel."""
    h, w = image.shape
    kh, kw = kernel.shape
    placed = np.zeros((h, w))
    for i in range(kh):
        for j in range(kw):
            placed[(i - kh // 2) % h, (j - kw // 2) % w] += kernel[i, j]
    return np.fft.ifft2(np.fft.fft2(image) * np.fft.fft2(placed)).real


def deconvolver_alone(image, psf, params, taper=16):
    """The restore pipeline minus its low-pass stage."""
    pad_h, pad_w = context_pad_width(image.shape, psf, taper)
    padded = np.pad(image, ((pad_h, pad_h), (pad_w, pad_w)), mode="reflect")
    tapered = edge_taper(padded, psf, taper)
    out, _ = admm_tv_deconvolve(tapered, psf, params)
    return out[pad_h:-pad_h, pad_w:-pad_w]


def test_criterion_1_airy_first_zero_and_disk_width():
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_zero_px = 0.0
    worst_width_rel = 0.0
    for _ in range(20):
        wavelength = rng.uniform(400e-9, 700e-9)
        radius = rng.uniform(40e-6, 150e-6)
        distance = max(rng.uniform(0.02, 0.2), 10.5 * radius**2 / wavelength)
        zero_m = J1_FIRST_ZERO * wavelength * distance / (2.0 * np.pi * radius)
        zero_px = rng.uniform(32.0, 60.0)
        pitch = zero_m / zero_px
        cfg = OpticalConfig(wavelength, radius, distance, pitch)
        size = 2 * (int(zero_px) + 6) + 1
        measured = measure_first_zero_radius(airy_psf(cfg, size))
        worst_zero_px = max(worst_zero_px, abs(measured - zero_m) / pitch)
        worst_width_rel = max(
            worst_width_rel, abs(airy_disk_width(cfg) - 2.0 * measured) / (2.0 * measured)
        )
    ok = worst_zero_px < 1.0 and worst_width_rel < 5e-3
    conclude(
        1,
        ok,
        f"20 configs: first-zero error <= {worst_zero_px:.3f} px (< 1 px), "
        f"disk width error <= {100 * worst_width_rel:.3f}% (< 0.5%)",
        started,
    )


def test_criterion_2_fft_convolution_matches_brute_force():
    started = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    cases = 0

    def compare(image, kernel_raw):
        nonlocal worst, cases
        kernel = kernel_raw / kernel_raw.sum()
        produced = forward_capture(image, Psf(kernel=kernel))
        worst = max(worst, float(np.abs(produced - conv_shift_oracle(image, kernel)).max()))
        cases += 1
        return produced, kernel

    # exhaustive over small geometries: every image size up to 16x16 against
    # every odd kernel up to 7x7 that fits
    for h in range(1, 17):
        for w in range(1, 17):
            image = rng.uniform(0.0, 1.0, (h, w))
            for kh in range(1, min(h, 7) + 1, 2):
                for kw in range(1, min(w, 7) + 1, 2):
                    compare(image, rng.uniform(0.0, 1.0, (kh, kw)) ** 2)

    scalar_worst = 0.0
    for trial in range(100):
        h, w = rng.integers(7, 17, size=2)
        k = int(rng.choice([3, 5, 7]))
        image = rng.uniform(0.0, 1.0, (h, w))
        produced, kernel = compare(image, rng.uniform(0.0, 1.0, (k, k)) ** 2)
        if trial < 10:  # per-pixel loop oracle on a subset, it is slow
            scalar_worst = max(
                scalar_worst,
                float(np.abs(produced - conv_scalar_oracle(image, kernel)).max()),
            )

    ok = worst < 1e-6 and scalar_worst < 1e-6
    conclude(
        2,
        ok,
        f"{cases} cases (exhaustive <=16x16/7x7 + 100 random): "
        f"max |fft - spatial| {worst:.2e} (< 1e-6)",
        started,
    )


def test_criterion_3_sensor_noise_variance_and_determinism():
    started = time.perf_counter()
    flat = np.full((512, 512), 0.25)
    worst_rel = 0.0
    for iso in (800, 1600, 3200):
        params = NoiseParams.for_iso(iso)
        gain = iso / params.iso_base
        analytic = 0.25 * gain / params.full_well_photons + params.read_sigma_dn**2
        noisy = add_sensor_noise(flat, params, exposure_scale=1.0, seed=40 + iso)
        worst_rel = max(worst_rel, abs(float(np.var(noisy)) / analytic - 1.0))
        repeat = add_sensor_noise(flat, params, exposure_scale=1.0, seed=40 + iso)
        deterministic = np.array_equal(noisy, repeat)
        if not deterministic:
            break
    ok = worst_rel < 0.05 and deterministic
    conclude(
        3,
        ok,
        f"ISO 800/1600/3200 on a 512^2 flat field: variance off analytic by "
        f"<= {100 * worst_rel:.2f}% (< 5%), same-seed bitwise repeat {deterministic}",
        started,
    )


def test_criterion_4_wiener_recovery_and_admm_agreement():
    started = time.perf_counter()
    scene = make_scene(1, 64)
    blurred = circular_blur_oracle(scene, WELL_CONDITIONED_3X3)
    psf = Psf(kernel=WELL_CONDITIONED_3X3)
    wiener = wiener_deconvolve(blurred, psf, WienerParams(nsr=0.0))
    recovery_db = psnr(scene, wiener)
    admm, _ = admm_tv_deconvolve(
        blurred, psf, AdmmParams(lambda_tv=1e-12, rho=0.3, max_iters=500, tol=1e-12)
    )
    agreement_db = psnr(wiener, admm)
    ok = recovery_db >= 80.0 and agreement_db >= 60.0
    conclude(
        4,
        ok,
        f"nsr=0 Wiener inverts a circular blur at {recovery_db:.1f} dB (>= 80); "
        f"lambda_tv=1e-12 ADMM matches it at {agreement_db:.1f} dB (>= 60)",
        started,
    )


def test_criterion_5_pipeline_gain_and_lowpass_advantage(
    benchmark_scenes, benchmark_degraded, default_optics, default_psf
):
    started = time.perf_counter()
    gain_params = AdmmParams(
        lambda_tv=1e-2, rho=3.0, max_iters=40, tol=1e-9, tv_mode="isotropic"
    )
    ablation_params = AdmmParams(lambda_tv=3e-4, rho=0.3, max_iters=15, tol=1e-9)

    gains = []
    advantages = []
    for scene, degraded in zip(benchmark_scenes, benchmark_degraded):
        restored, _ = restore_pipeline(
            degraded, default_psf, default_optics, "admm", gain_params
        )
        gains.append(psnr(scene, restored) - psnr(scene, degraded))

        piped, _ = restore_pipeline(
            degraded, default_psf, default_optics, "admm", ablation_params
        )
        alone = deconvolver_alone(degraded, default_psf, ablation_params)
        advantages.append(psnr(scene, piped) - psnr(scene, alone))

    mean_gain = float(np.mean(gains))
    mean_advantage = float(np.mean(advantages))
    ok = mean_gain >= 2.0 and mean_advantage > 0.0
    conclude(
        5,
        ok,
        f"10 scenes at ISO 3200: mean restore gain {mean_gain:+.2f} dB (>= +2), "
        f"low-pass ablation advantage {mean_advantage:+.2f} dB (> 0)",
        started,
    )


def test_criterion_6_restoration_sharpens_the_effective_psf(
    default_optics, default_psf
):
    started = time.perf_counter()
    point = np.zeros((257, 257))
    point[128, 128] = 1.0
    blurred = forward_capture(point, default_psf)
    restored, _ = restore_pipeline(
        blurred, default_psf, default_optics, "wiener", WienerParams(nsr=1e-4)
    )
    pitch = default_optics.pixel_pitch
    blurred_mtf50 = mtf50(mtf_from_kernel(blurred, pitch=pitch))
    restored_mtf50 = mtf50(mtf_from_kernel(restored, pitch=pitch))
    ratio = restored_mtf50 / blurred_mtf50
    ok = ratio >= 1.5
    conclude(
        6,
        ok,
        f"effective-PSF MTF50 {blurred_mtf50:.2f} -> {restored_mtf50:.2f} cyc/mm, "
        f"ratio {ratio:.2f} (>= 1.5)",
        started,
    )


SWEEP_CONFIG = """\
pixel_pitch_m = 30e-6
psf_size = 11
iso = 1600
read_sigma_dn = 0.005
seed = 3
method = admm
lambda_tv = 0.002
rho = 0.5
max_iters = 40
"""


def _sweep_psnrs(out_dir):
    rows = (out_dir / "sweep.csv").read_text().splitlines()[1:]
    return [float(row.split(",")[1]) for row in rows]


def test_criterion_7_iso_matters_less_than_light(tmp_path, capsys):
    started = time.perf_counter()
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(SWEEP_CONFIG)
    scene = np.zeros((96, 96))
    scene[20:60, 30:70] = 0.8
    scene[40:50, 10:20] = 0.4
    scene += 0.05
    clean = tmp_path / "clean.png"
    write_image(clean, scene)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code_iso = main(
            ["sweep", "--config", str(cfg), "--axis", "iso",
             "--values", "1600,3200,6400,12800",
             "--in", str(clean), "--out-dir", str(tmp_path / "iso")]
        )
        code_exp = main(
            ["sweep", "--config", str(cfg), "--axis", "exposure",
             "--values", "1,0.5,0.25,0.125",
             "--in", str(clean), "--out-dir", str(tmp_path / "exposure")]
        )
    capsys.readouterr()  # the commands echo their CSV; keep our line clean

    iso_psnrs = _sweep_psnrs(tmp_path / "iso")
    exp_psnrs = _sweep_psnrs(tmp_path / "exposure")
    iso_range = max(iso_psnrs) - min(iso_psnrs)
    exp_range = max(exp_psnrs) - min(exp_psnrs)
    ok = code_iso == 0 and code_exp == 0 and iso_range < exp_range
    conclude(
        7,
        ok,
        f"restored-PSNR spread: {iso_range:.2f} dB over an 8x ISO sweep vs "
        f"{exp_range:.2f} dB over an 8x exposure sweep (fixed-light ISO must matter less)",
        started,
    )


def test_criterion_8_invariant_bundle(tmp_path, capsys, default_psf):
    started = time.perf_counter()
    rng = np.random.default_rng(88)
    checks = {}

    # low-pass: orthogonal projection, linear
    image = rng.uniform(0.0, 1.0, (64, 64))
    kept = ideal_lowpass(image, 0.2)
    removed = image - kept
    checks["lowpass"] = (
        np.allclose(ideal_lowpass(kept, 0.2), kept, atol=1e-12)
        and abs(float((kept * removed).sum())) < 1e-8
        and np.allclose(
            ideal_lowpass(0.5 * image + 2.0 * kept, 0.2),
            0.5 * kept + 2.0 * kept,
            atol=1e-10,
        )
    )

    # PSF: unit sum, non-negative, radially symmetric, peaked at center
    kernel = default_psf.kernel
    checks["psf"] = (
        abs(float(kernel.sum()) - 1.0) < 1e-12
        and float(kernel.min()) >= 0.0
        and float(np.abs(kernel - kernel.T).max()) < 1e-9
        and float(np.abs(kernel - kernel[::-1, ::-1]).max()) < 1e-9
        and kernel[80, 80] == kernel.max()
    )

    # metric identities
    a = rng.uniform(0.0, 1.0, (48, 48))
    b = rng.uniform(0.0, 1.0, (48, 48))
    checks["metrics"] = (
        psnr(a, a) == float("inf")
        and abs(ssim(a, a) - 1.0) < 1e-12
        and psnr(a, b) == psnr(b, a)
        and abs(ssim(a, b) - ssim(a[::-1], b[::-1])) < 1e-12
    )

    # reblur residual is zero for the true pair and grows under perturbation
    psf3 = Psf(kernel=WELL_CONDITIONED_3X3)
    scene = make_scene(2, 48)
    observation = forward_capture(scene, psf3)
    base = reblur_residual(scene, observation, psf3)
    checks["reblur"] = base == 0.0 and all(
        reblur_residual(scene + 0.01 * rng.standard_normal(scene.shape), observation, psf3)
        > base
        for _ in range(5)
    )

    # sensor model: bitwise determinism and linear optics stage
    params = NoiseParams.for_iso(1600)
    checks["capture"] = np.array_equal(
        simulate_pinhole_capture(scene, psf3, params, seed=5),
        simulate_pinhole_capture(scene, psf3, params, seed=5),
    ) and np.allclose(
        forward_capture(0.3 * scene + 1.7 * a, psf3),
        0.3 * forward_capture(scene, psf3) + 1.7 * forward_capture(a, psf3),
        atol=1e-10,
    )

    # dataset: identical manifests across runs, patches regenerable from one
    src = tmp_path / "src"
    src.mkdir()
    for index in range(2):
        write_image(src / f"s{index}.png", make_scene(index, 96))
    coarse = airy_psf(OpticalConfig(pixel_pitch=30e-6, distance=0.2), 11)

    def build(out):
        return generate_pairs(
            DatasetSpec(
                source_dir=str(src),
                output_dir=str(tmp_path / out),
                psf=coarse,
                iso_choices=(1600, 3200),
                exposure_scales=(1.0,),
                patch_size=64,
                patches_per_image=1,
                seed=9,
            )
        )

    manifest = build("out1")
    pair = manifest["pairs"][0]
    r0, c0 = pair["patch_origin"]
    regenerated = simulate_pinhole_capture(
        read_image(pair["source"]),
        coarse,
        NoiseParams.for_iso(pair["iso"]),
        exposure_scale=pair["exposure_scale"],
        seed=pair["capture_seed"],
    )[r0 : r0 + 64, c0 : c0 + 64]
    checks["dataset"] = manifest == build("out2") and np.array_equal(
        read_image(tmp_path / "out1" / pair["degraded"]),
        quantize_like_png(regenerated),
    )

    # CLI: byte-identical artifacts on repeated runs
    cfg = tmp_path / "run.cfg"
    cfg.write_text("distance_m = 0.2\n" + SWEEP_CONFIG)
    clean = tmp_path / "clean.png"
    write_image(clean, make_scene(0, 96))
    for index in range(2):
        main(["simulate", "--config", str(cfg), "--in", str(clean),
              "--out", str(tmp_path / f"sim{index}.png")])
        main(["restore", "--config", str(cfg), "--in", str(tmp_path / f"sim{index}.png"),
              "--out", str(tmp_path / f"rest{index}.png")])
    capsys.readouterr()
    checks["cli"] = (
        (tmp_path / "sim0.png").read_bytes() == (tmp_path / "sim1.png").read_bytes()
        and (tmp_path / "rest0.png").read_bytes() == (tmp_path / "rest1.png").read_bytes()
    )

    failed = sorted(name for name, passed in checks.items() if not passed)
    ok = not failed
    conclude(
        8,
        ok,
        "invariants re-asserted: lowpass projection, PSF shape, metric "
        "identities, reblur minimum, capture determinism, dataset manifest "
        "reproducibility, CLI determinism"
        + (f"; FAILED: {', '.join(failed)}" if failed else "")
        + " (full property suites live in the module tests)",
        started,
    )
