"""scikit-learn style wrappers over the functional core.

Each estimator keeps constructor arguments untouched (get_params/set_params
compatible), builds its derived state in fit with trailing-underscore names,
and transforms either a single (H, W[, C]) image or a sequence of them,
returning the matching structure. They compose with sklearn.pipeline.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .optics import OpticalConfig, Psf, airy_psf
from .restore import AdmmParams, WienerParams, restore_pipeline, wiener_deconvolve
from .sensor import NoiseParams, simulate_pinhole_capture
from .validation import check_image


def _is_single_image(X) -> bool:
    return isinstance(X, np.ndarray) and X.ndim in (2, 3) and (
        X.ndim == 2 or X.shape[-1] in (1, 3)
    )


def _map_images(X, fn):
    if _is_single_image(X):
        return fn(X)
    return [fn(item) for item in X]


class _OpticsMixin:
    def _make_psf(self) -> Psf:
        if self.psf is not None:
            if not isinstance(self.psf, Psf):
                raise TypeError("psf must be a Psf instance or None")
            return self.psf
        cfg = OpticalConfig(
            wavelength=self.wavelength,
            pinhole_radius=self.pinhole_radius,
            distance=self.distance,
            pixel_pitch=self.pixel_pitch,
        )
        return airy_psf(cfg, self.psf_size)


class PinholeDegrader(BaseEstimator, TransformerMixin, _OpticsMixin):
    """Forward model as a transformer: Airy blur, sensor noise, clipping.

    A fresh seed per transform call would break fit/transform determinism, so
    the seed is a constructor parameter; successive images within one call
    use seed, seed+1, ... in input order.
    """

    def __init__(
        self,
        psf=None,
        wavelength=550e-9,
        pinhole_radius=75e-6,
        distance=0.03,
        pixel_pitch=3.75e-6,
        psf_size=161,
        iso=3200,
        iso_base=100,
        full_well_photons=10000.0,
        read_sigma_dn=0.0,
        exposure_scale=1.0,
        headroom=4.0,
        seed=0,
    ):
        self.psf = psf
        self.wavelength = wavelength
        self.pinhole_radius = pinhole_radius
        self.distance = distance
        self.pixel_pitch = pixel_pitch
        self.psf_size = psf_size
        self.iso = iso
        self.iso_base = iso_base
        self.full_well_photons = full_well_photons
        self.read_sigma_dn = read_sigma_dn
        self.exposure_scale = exposure_scale
        self.headroom = headroom
        self.seed = seed

    def fit(self, X=None, y=None):
        self.psf_ = self._make_psf()
        self.noise_params_ = NoiseParams(
            iso=self.iso,
            full_well_photons=self.full_well_photons,
            iso_base=self.iso_base,
            read_sigma_dn=self.read_sigma_dn,
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "psf_")
        counter = {"next": int(self.seed)}

        def degrade(image):
            seed = counter["next"]
            counter["next"] += 1
            return simulate_pinhole_capture(
                check_image(image),
                self.psf_,
                self.noise_params_,
                exposure_scale=self.exposure_scale,
                seed=seed,
                headroom=self.headroom,
            )

        return _map_images(X, degrade)


class WienerDeconvolver(BaseEstimator, TransformerMixin, _OpticsMixin):
    """Wiener deconvolution against a fixed or synthesized PSF."""

    def __init__(
        self,
        psf=None,
        nsr=1e-3,
        wavelength=550e-9,
        pinhole_radius=75e-6,
        distance=0.03,
        pixel_pitch=3.75e-6,
        psf_size=161,
    ):
        self.psf = psf
        self.nsr = nsr
        self.wavelength = wavelength
        self.pinhole_radius = pinhole_radius
        self.distance = distance
        self.pixel_pitch = pixel_pitch
        self.psf_size = psf_size

    def fit(self, X=None, y=None):
        self.psf_ = self._make_psf()
        self.params_ = WienerParams(nsr=self.nsr)
        return self

    def transform(self, X):
        check_is_fitted(self, "psf_")
        return _map_images(X, lambda im: wiener_deconvolve(im, self.psf_, self.params_))


class DiffractionRestorer(BaseEstimator, TransformerMixin, _OpticsMixin):
    """Full restoration pipeline: edge taper, diffraction-limit LPF, deconvolve.

    After transform, reports_ holds one RestoreReport per processed image.
    """

    def __init__(
        self,
        psf=None,
        method="admm",
        nsr=1e-3,
        lambda_tv=0.005,
        rho=1.0,
        max_iters=100,
        tol=1e-4,
        tv_mode="anisotropic",
        taper_width=16,
        wavelength=550e-9,
        pinhole_radius=75e-6,
        distance=0.03,
        pixel_pitch=3.75e-6,
        psf_size=161,
    ):
        self.psf = psf
        self.method = method
        self.nsr = nsr
        self.lambda_tv = lambda_tv
        self.rho = rho
        self.max_iters = max_iters
        self.tol = tol
        self.tv_mode = tv_mode
        self.taper_width = taper_width
        self.wavelength = wavelength
        self.pinhole_radius = pinhole_radius
        self.distance = distance
        self.pixel_pitch = pixel_pitch
        self.psf_size = psf_size

    def fit(self, X=None, y=None):
        self.psf_ = self._make_psf()
        self.optical_config_ = OpticalConfig(
            wavelength=self.wavelength,
            pinhole_radius=self.pinhole_radius,
            distance=self.distance,
            pixel_pitch=self.pixel_pitch,
        )
        if self.method == "wiener":
            self.method_params_ = WienerParams(nsr=self.nsr)
        else:
            self.method_params_ = AdmmParams(
                lambda_tv=self.lambda_tv,
                rho=self.rho,
                max_iters=self.max_iters,
                tol=self.tol,
                tv_mode=self.tv_mode,
            )
        return self

    def transform(self, X):
        check_is_fitted(self, "psf_")
        reports = []

        def restore(image):
            restored, report = restore_pipeline(
                image,
                self.psf_,
                self.optical_config_,
                method=self.method,
                method_params=self.method_params_,
                taper_width=self.taper_width,
            )
            reports.append(report)
            return restored

        result = _map_images(X, restore)
        self.reports_ = reports
        return result


class AdmmDeconvolver(DiffractionRestorer):
    """DiffractionRestorer pinned to the ADMM method, for pipeline clarity."""

    def __init__(
        self,
        psf=None,
        lambda_tv=0.005,
        rho=1.0,
        max_iters=100,
        tol=1e-4,
        tv_mode="anisotropic",
        taper_width=16,
        wavelength=550e-9,
        pinhole_radius=75e-6,
        distance=0.03,
        pixel_pitch=3.75e-6,
        psf_size=161,
    ):
        super().__init__(
            psf=psf,
            method="admm",
            lambda_tv=lambda_tv,
            rho=rho,
            max_iters=max_iters,
            tol=tol,
            tv_mode=tv_mode,
            taper_width=taper_width,
            wavelength=wavelength,
            pinhole_radius=pinhole_radius,
            distance=distance,
            pixel_pitch=pixel_pitch,
            psf_size=psf_size,
        )
