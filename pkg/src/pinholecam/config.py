"""Run configuration: flat key=value files with command-line overrides.

The file format is a TOML-ish subset: one `key = value` per line, `#`
comments, blank lines, and optional `[section]` headers which are ignored
(keys are globally unique). Lists are comma-separated. Every value is
type-checked against its field and the derived domain objects are built
eagerly, so a bad config fails at parse time with the offending key in the
message rather than deep inside a run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, InvalidArgumentError
from .optics import OpticalConfig
from .restore import AdmmParams, WienerParams
from .sensor import NoiseParams

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    """Every knob of the simulate/restore/dataset pipelines, flat."""

    # optics
    wavelength_m: float = 550e-9
    pinhole_radius_m: float = 75e-6
    distance_m: float = 0.03
    pixel_pitch_m: float = 3.75e-6
    psf_size: int = 161
    per_channel_psf: bool = False

    # sensor noise
    iso: int = 3200
    iso_base: int = 100
    full_well_photons: float = 10000.0
    read_sigma_dn: float = 0.0
    exposure_scale: float = 1.0
    headroom: float = 4.0
    seed: int = 0

    # restoration
    method: str = "admm"
    nsr: float = 1e-3
    lambda_tv: float = 0.005
    rho: float = 1.0
    max_iters: int = 100
    tol: float = 1e-4
    tv_mode: str = "anisotropic"
    taper_width: int = 16

    # tiling for large inputs
    tile_threshold_mpix: float = 4.0
    tile: int = 1024
    overlap: int = 64

    # dataset generation
    source_dir: str = ""
    output_dir: str = ""
    iso_choices: tuple = (1600, 3200, 6400)
    exposure_scales: tuple = (1.0,)
    patch_size: int = 256
    patches_per_image: int = 4

    @classmethod
    def from_file(cls, path, overrides=()) -> "RunConfig":
        """Parse a config file, apply key=value overrides, validate."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        config = cls()
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{path}:{lineno}: expected key = value, got {stripped!r}"
                )
            key, _, value = stripped.partition("=")
            config._assign(key.strip(), _strip_inline_comment(value))
        config.apply_overrides(overrides)
        config.validate()
        return config

    def apply_overrides(self, overrides):
        """Apply `key=value` strings on top of the current values."""
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must be key=value, got {item!r}")
            key, _, value = item.partition("=")
            self._assign(key.strip(), value.strip())

    def _assign(self, key: str, raw: str):
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(self, key, _coerce(key, raw, getattr(self, key)))

    def validate(self):
        """Build every derived domain object, mapping failures to ConfigError."""
        if self.psf_size % 2 == 0 or self.psf_size < 3:
            raise ConfigError(f"psf_size: must be odd and >= 3, got {self.psf_size}")
        if self.method not in ("wiener", "admm"):
            raise ConfigError(f"method: must be 'wiener' or 'admm', got {self.method!r}")
        if self.taper_width < 0:
            raise ConfigError(f"taper_width: must be >= 0, got {self.taper_width}")
        if not self.exposure_scale > 0:
            raise ConfigError(
                f"exposure_scale: must be positive, got {self.exposure_scale}"
            )
        if not self.headroom > 0:
            raise ConfigError(f"headroom: must be positive, got {self.headroom}")
        if not self.tile_threshold_mpix > 0:
            raise ConfigError(
                f"tile_threshold_mpix: must be positive, got {self.tile_threshold_mpix}"
            )
        if self.tile <= self.overlap or self.overlap < 1:
            raise ConfigError(
                f"tile/overlap: need tile > overlap >= 1, got {self.tile}/{self.overlap}"
            )
        try:
            self.to_optical_config()
        except InvalidArgumentError as exc:
            raise ConfigError(f"optics: {exc}") from None
        try:
            self.to_noise_params()
        except InvalidArgumentError as exc:
            raise ConfigError(f"noise: {exc}") from None
        try:
            self.to_method_params()
        except InvalidArgumentError as exc:
            raise ConfigError(f"{self.method}: {exc}") from None

    # Builders for the domain objects the modules actually consume.

    def to_optical_config(self) -> OpticalConfig:
        return OpticalConfig(
            wavelength=self.wavelength_m,
            pinhole_radius=self.pinhole_radius_m,
            distance=self.distance_m,
            pixel_pitch=self.pixel_pitch_m,
        )

    def to_noise_params(self, iso=None) -> NoiseParams:
        return NoiseParams(
            iso=int(self.iso if iso is None else iso),
            full_well_photons=self.full_well_photons,
            iso_base=self.iso_base,
            read_sigma_dn=self.read_sigma_dn,
        )

    def to_method_params(self):
        if self.method == "wiener":
            return WienerParams(nsr=self.nsr)
        return AdmmParams(
            lambda_tv=self.lambda_tv,
            rho=self.rho,
            max_iters=self.max_iters,
            tol=self.tol,
            tv_mode=self.tv_mode,
        )


def _strip_inline_comment(value: str) -> str:
    # a '#' outside quotes starts a comment; quoted values keep everything
    value = value.strip()
    if value.startswith('"') and value.endswith('"') and len(value) >= 2:
        return value[1:-1]
    return value.split("#", 1)[0].strip()


def _coerce(key: str, raw: str, current):
    if isinstance(current, bool):
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(current, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(current, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if isinstance(current, tuple):
        items = [part.strip() for part in raw.split(",") if part.strip()]
        if not items:
            raise ConfigError(f"{key}: expected a comma-separated list, got {raw!r}")
        kind = int if key == "iso_choices" else float
        try:
            return tuple(kind(part) for part in items)
        except ValueError:
            raise ConfigError(
                f"{key}: expected a list of {kind.__name__}s, got {raw!r}"
            ) from None
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    return raw
