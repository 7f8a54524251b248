"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError


def check_image(image, *, name: str = "image", require_nonnegative: bool = False) -> np.ndarray:
    """Validate an image array and return it as float64.

    Accepts (H, W) grayscale or (H, W, C) with C in {1, 3}; rejects empty
    arrays and NaN/Inf samples. Values may exceed [0, 1]; linear light is
    assumed but not enforced.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidArgumentError(
            f"{name} must be (H, W) or (H, W, C), got shape {arr.shape}"
        )
    if arr.ndim == 3 and arr.shape[2] not in (1, 3):
        raise InvalidArgumentError(
            f"{name} must have 1 or 3 channels, got {arr.shape[2]}"
        )
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf samples")
    if require_nonnegative and float(arr.min()) < 0.0:
        raise InvalidInputError(f"{name} contains negative samples")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, *, names=("first", "second")) -> None:
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"{names[0]} and {names[1]} images must share dimensions, "
            f"got {a.shape} vs {b.shape}"
        )


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be strictly positive, got {value!r}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not (math.isfinite(value) and value >= 0):
        raise InvalidArgumentError(f"{name} must be >= 0, got {value!r}")
    return value


def as_stack(image: np.ndarray) -> tuple[np.ndarray, bool]:
    """View an image as (H, W, C), remembering whether it was 2-D."""
    if image.ndim == 2:
        return image[:, :, None], True
    return image, False


def from_stack(stack: np.ndarray, was_2d: bool) -> np.ndarray:
    return stack[:, :, 0] if was_2d else stack
