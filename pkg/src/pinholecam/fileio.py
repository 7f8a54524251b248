"""File formats: 8/16-bit PNG, PFM, and plain-text sidecar metadata.

PNG pixel values map linearly to [0, 1]; no gamma is applied anywhere, the
whole package works in linear light. PFM carries float data at native
precision. PSFs travel as grayscale PFM plus a `<path>.meta` sidecar holding
the sample pitch; Bayer frames travel as 16-bit PNG plus a sidecar declaring
the CFA pattern and black level.

PNG files are structurally validated (signature, chunk CRCs, chunk order)
before decoding so that a corrupt file fails with a byte offset instead of a
silent None from the decoder.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from pathlib import Path

import cv2
import numpy as np

from .errors import InvalidArgumentError, InvalidInputError, ParseError
from .optics import Psf
from .sensor import BAYER_PATTERNS, BayerImage
from .validation import check_image

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def validate_png(path):
    """Walk the chunk structure of a PNG file, raising ParseError on damage.

    Checks the signature, per-chunk CRCs, IHDR-first and IEND-last ordering,
    and that no chunk claims bytes past the end of the file. Does not decode
    pixel data.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != _PNG_SIGNATURE:
        raise ParseError(path, "not a PNG file (bad signature)", offset=0)
    offset = 8
    first = True
    while offset < len(data):
        if len(data) - offset < 8:
            raise ParseError(path, "truncated chunk header", offset=offset)
        (length,) = struct.unpack(">I", data[offset : offset + 4])
        ctype = data[offset + 4 : offset + 8]
        if not all(65 <= b <= 90 or 97 <= b <= 122 for b in ctype):
            raise ParseError(
                path, f"invalid chunk type {ctype!r}", offset=offset + 4
            )
        name = ctype.decode("ascii")
        if first:
            if ctype != b"IHDR":
                raise ParseError(path, "first chunk is not IHDR", offset=offset + 4)
            if length != 13:
                raise ParseError(path, "IHDR length is not 13", offset=offset)
            first = False
        end = offset + 8 + length + 4
        if end > len(data):
            raise ParseError(path, f"truncated {name} chunk", offset=offset)
        payload = data[offset + 8 : offset + 8 + length]
        (crc,) = struct.unpack(">I", data[offset + 8 + length : end])
        if zlib.crc32(ctype + payload) & 0xFFFFFFFF != crc:
            raise ParseError(
                path, f"CRC mismatch in {name} chunk", offset=offset + 8 + length
            )
        if ctype == b"IEND":
            if end != len(data):
                raise ParseError(path, "trailing data after IEND", offset=end)
            return
        offset = end
    raise ParseError(path, "missing IEND chunk", offset=len(data))


def _read_png(path) -> np.ndarray:
    validate_png(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ParseError(path, "PNG decode failed")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise InvalidInputError(f"{path}: unsupported PNG sample type {raw.dtype}")
    if raw.ndim == 3:
        if raw.shape[2] != 3:
            raise InvalidInputError(
                f"{path}: expected 1 or 3 channels, got {raw.shape[2]}"
            )
        raw = raw[:, :, ::-1]  # BGR storage order to RGB
    return raw.astype(np.float64) / scale


def read_image(path) -> np.ndarray:
    """Load a PNG or PFM image as float64, PNG values mapped to [0, 1]."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        return read_pfm(path)
    if suffix == ".png":
        return _read_png(path)
    raise InvalidArgumentError(f"unsupported image format {suffix!r} for {path}")


def write_image(path, image, bit_depth: int = 16):
    """Write an image as PNG (values clipped to [0, 1]) or PFM (by suffix)."""
    arr = check_image(image)
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        write_pfm(path, arr)
        return
    if suffix != ".png":
        raise InvalidArgumentError(f"unsupported image format {suffix!r} for {path}")
    if bit_depth == 8:
        scale, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise InvalidArgumentError(f"bit_depth must be 8 or 16, got {bit_depth}")
    quantized = np.rint(np.clip(arr, 0.0, 1.0) * scale).astype(dtype)
    if quantized.ndim == 3:
        if quantized.shape[2] == 1:
            quantized = quantized[:, :, 0]
        else:
            quantized = quantized[:, :, ::-1]  # RGB to BGR storage order
    ok = cv2.imwrite(str(path), np.ascontiguousarray(quantized))
    if not ok:
        raise InvalidArgumentError(f"failed to write PNG to {path}")


def quantize_like_png(image, bit_depth: int = 16) -> np.ndarray:
    """The exact value mapping a PNG round-trip applies, without the file."""
    if bit_depth == 8:
        scale = 255.0
    elif bit_depth == 16:
        scale = 65535.0
    else:
        raise InvalidArgumentError(f"bit_depth must be 8 or 16, got {bit_depth}")
    arr = check_image(image)
    return np.rint(np.clip(arr, 0.0, 1.0) * scale) / scale


# ---------------------------------------------------------------------------
# PFM


def read_pfm(path) -> np.ndarray:
    """Parse a Portable Float Map: returns (H, W) for Pf, (H, W, 3) for PF.

    Rows are stored bottom-to-top; a negative scale field marks little-endian
    samples. The scale magnitude is preserved in the bytes but not applied,
    matching the common decoder behavior.
    """
    data = Path(path).read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ParseError(path, "unexpected end of PFM header", offset=pos)
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos], start

    magic, off = token()
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise ParseError(path, f"bad PFM magic {magic!r}", offset=off)

    def integer(name):
        tok, off = token()
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(path, f"bad PFM {name} {tok!r}", offset=off) from None
        if value <= 0:
            raise ParseError(path, f"PFM {name} must be positive, got {value}", offset=off)
        return value

    width = integer("width")
    height = integer("height")
    tok, off = token()
    try:
        scale = float(tok)
    except ValueError:
        raise ParseError(path, f"bad PFM scale {tok!r}", offset=off) from None
    if scale == 0.0:
        raise ParseError(path, "PFM scale must be nonzero", offset=off)

    # exactly one whitespace byte separates the header from the raster
    raster_start = pos + 1
    expected = width * height * channels * 4
    raster = data[raster_start : raster_start + expected]
    if len(raster) < expected:
        raise ParseError(
            path,
            f"raster truncated: expected {expected} bytes, found {len(raster)}",
            offset=raster_start,
        )
    if len(data) > raster_start + expected:
        raise ParseError(path, "trailing data after raster", offset=raster_start + expected)
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(raster, dtype=dtype).reshape(height, width, channels)
    arr = arr[::-1].astype(np.float64)
    return arr[:, :, 0] if channels == 1 else arr


def write_pfm(path, image):
    """Write float32 PFM, little-endian (scale -1.0), rows bottom-to-top."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise InvalidArgumentError(
            f"PFM holds (H, W) or (H, W, 3) data, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise InvalidArgumentError("PFM data must be finite")
    h, w = arr.shape[:2]
    header = b"%s\n%d %d\n-1.0\n" % (magic, w, h)
    payload = np.ascontiguousarray(arr[::-1].astype("<f4")).tobytes()
    Path(path).write_bytes(header + payload)


# ---------------------------------------------------------------------------
# Sidecar metadata


def _sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def _read_sidecar(path) -> dict:
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise ParseError(sidecar, "missing sidecar file")
    entries = {}
    for lineno, line in enumerate(sidecar.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(sidecar, f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def save_psf(path, psf: Psf):
    """PSF kernel as grayscale PFM plus a sidecar recording the pitch."""
    write_pfm(path, psf.kernel)
    _sidecar_path(path).write_text(f"pitch_m={psf.pitch!r}\n")


def load_psf(path) -> Psf:
    """Load a PSF written by save_psf.

    The kernel is renormalized to absorb float32 quantization from the PFM
    encoding, so the unit-sum invariant holds exactly.
    """
    kernel = read_pfm(path)
    if kernel.ndim != 2:
        raise ParseError(path, "PSF file must be grayscale")
    meta = _read_sidecar(path)
    if "pitch_m" not in meta:
        raise ParseError(_sidecar_path(path), "missing pitch_m entry")
    try:
        pitch = float(meta["pitch_m"])
    except ValueError:
        raise ParseError(
            _sidecar_path(path), f"bad pitch_m value {meta['pitch_m']!r}"
        ) from None
    total = float(kernel.sum())
    if not total > 0.0:
        raise ParseError(path, "PSF kernel sums to zero")
    return Psf(kernel=np.clip(kernel, 0.0, None) / total, pitch=pitch)


def save_bayer(path, raw: BayerImage):
    """Bayer frame as 16-bit PNG plus a sidecar with pattern and black level."""
    write_image(path, raw.data, bit_depth=16)
    _sidecar_path(path).write_text(
        f"pattern={raw.pattern}\nblack_level={raw.black_level!r}\n"
    )


def load_bayer(path) -> BayerImage:
    data = _read_png(path)
    if data.ndim != 2:
        raise InvalidInputError(f"{path}: Bayer frame must be single-channel")
    meta = _read_sidecar(path)
    pattern = meta.get("pattern")
    if pattern not in BAYER_PATTERNS:
        raise ParseError(
            _sidecar_path(path),
            f"pattern must be one of {BAYER_PATTERNS}, got {pattern!r}",
        )
    try:
        black_level = float(meta.get("black_level", "0.0"))
    except ValueError:
        raise ParseError(
            _sidecar_path(path), f"bad black_level value {meta['black_level']!r}"
        ) from None
    return BayerImage(data=data, pattern=pattern, black_level=black_level)


# ---------------------------------------------------------------------------
# Reports, curves, hashes


def write_mtf_csv(path, curve):
    """Two-column CSV, full float precision, header freq_cyc_per_mm,modulation."""
    lines = ["freq_cyc_per_mm,modulation"]
    for freq, modulation in curve.samples:
        lines.append(f"{freq!r},{modulation!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_jsonl(path, reports):
    """Write restoration reports as JSON lines, one object per report."""
    if not isinstance(reports, (list, tuple)):
        reports = [reports]
    Path(path).write_text("".join(r.to_json() + "\n" for r in reports))


def append_report_jsonl(path, report):
    with open(path, "a") as fh:
        fh.write(report.to_json() + "\n")


def psf_sha256(psf: Psf) -> str:
    """Hash of the kernel bytes and pitch; identifies a PSF in manifests."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(psf.kernel, dtype=np.float64).tobytes())
    digest.update(struct.pack("<d", float(psf.pitch)))
    return digest.hexdigest()


def load_manifest(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"bad manifest JSON: {exc}") from None
