"""Ground-truth error, baseline saliency estimators, and binarization.

The "interest" baseline is simply an externally produced region-of-interest
probability map read back as a saliency field, so it needs no operation of
its own here.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import ValidationError
from .raster import Bitmap, ErrorMap, Image, _grid, load_image, read_emap

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-pixel probabilities in [0, 1] (ROI scores or estimated error)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _grid(self.data, np.float64)
        if not np.isfinite(arr).all():
            raise ValidationError("probability map contains non-finite values")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValidationError("probability map values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class Threshold:
    """Error cutoff separating pixels worth rescanning from the rest."""

    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValidationError(f"threshold must be finite and >= 0, got {self.epsilon}")


def residual_error(a, b) -> ErrorMap:
    """Per-pixel absolute difference |a - b| of two same-shaped rasters."""
    if a.shape != b.shape:
        raise ValidationError(f"residual inputs disagree on dimensions: {a.shape} vs {b.shape}")
    return ErrorMap(np.abs(a.data - b.data))


def gradient_saliency(img: Image) -> ErrorMap:
    """Sobel gradient magnitude with clamp-to-edge borders."""
    if img.height < 3 or img.width < 3:
        raise ValidationError(f"image {img.shape} is smaller than the 3x3 Sobel kernel")
    p = np.pad(img.data, 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return ErrorMap(np.sqrt(gx * gx + gy * gy))


def entropy_saliency(p: ProbabilityMap) -> ErrorMap:
    """Binary entropy in bits of each probability; 0 log 0 is taken as 0."""
    q = p.data
    h = -(xlogy(q, q) + xlogy(1.0 - q, 1.0 - q)) / _LOG2
    # tiny negative rounding residue would violate the error-map invariant
    return ErrorMap(np.maximum(h, 0.0))


def mean_threshold(e: ErrorMap) -> Threshold:
    """Arithmetic mean of the error distribution.

    The result is clamped into [min, max] of the data: summation rounding can
    otherwise land one ulp below every value, which would make the strict
    binarization mark a constant map everywhere.
    """
    if e.data.size == 0:
        raise ValidationError("cannot take the mean threshold of an empty map")
    mean = float(e.data.mean())
    return Threshold(min(max(mean, float(e.data.min())), float(e.data.max())))


def binarize(e: ErrorMap, t: Threshold) -> Bitmap:
    """Bit set exactly where the error strictly exceeds the threshold."""
    return Bitmap(e.data > t.epsilon)


def load_estimated_error(path) -> ErrorMap:
    """Read an externally estimated error map; values must lie in [0, 1]."""
    emap = read_emap(path)
    if emap.data.size and emap.data.max() > 1.0:
        raise ValidationError(f"{path}: estimated error values must lie in [0, 1]")
    return emap


def load_probability_map(path) -> ProbabilityMap:
    """Read a probability map (ROI scores) from an EMAP or 8-bit image file."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"EMAP":
        return ProbabilityMap(read_emap(path).data)
    return ProbabilityMap(load_image(path).data)
