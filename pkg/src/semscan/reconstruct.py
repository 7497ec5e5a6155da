"""Reconstruction from the low-resolution scan, and output compositing.

Upsampling inverts the top-left anchored decimation: output pixel (i, j)
interpolates the input at position (i / rate, j / rate).  Bicubic uses the
Catmull-Rom kernel (a = -0.5) with clamp-to-edge boundary handling; nearest
takes the sample whose anchored cell contains the position (floor).
"""

import numpy as np

from .errors import ValidationError
from .raster import Bitmap, Image

CATMULL_ROM_A = -0.5

METHODS = ("nearest", "bilinear", "bicubic")


def _cubic_taps(n_in: int, rate: int) -> tuple[np.ndarray, np.ndarray]:
    """Tap indices (clamped to the edge) and Catmull-Rom weights per output index."""
    a = CATMULL_ROM_A
    pos = np.arange(n_in * rate) / rate
    base = np.floor(pos).astype(np.int64)
    t = pos - base
    idx = np.stack([base - 1, base, base + 1, base + 2], axis=1)
    np.clip(idx, 0, n_in - 1, out=idx)
    # Keys kernel evaluated at distances t+1, t, 1-t, 2-t
    w = np.empty((pos.size, 4))
    x = t + 1.0
    w[:, 0] = a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a
    w[:, 1] = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    x = 1.0 - t
    w[:, 2] = (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    x = 2.0 - t
    w[:, 3] = a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a
    return idx, w


def _linear_taps(n_in: int, rate: int) -> tuple[np.ndarray, np.ndarray]:
    pos = np.arange(n_in * rate) / rate
    base = np.floor(pos).astype(np.int64)
    t = pos - base
    idx = np.stack([base, base + 1], axis=1)
    np.clip(idx, 0, n_in - 1, out=idx)
    w = np.stack([1.0 - t, t], axis=1)
    return idx, w


def _interp_axis0(data: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.zeros((idx.shape[0], data.shape[1]))
    for k in range(idx.shape[1]):
        out += w[:, k : k + 1] * data[idx[:, k], :]
    return out


def upsample(img: Image, rate: int, method: str = "bicubic") -> Image:
    """Upsample by an integer factor; output dims are input dims * rate."""
    if rate < 1:
        raise ValidationError(f"upsample rate must be >= 1, got {rate}")
    if method not in METHODS:
        raise ValidationError(f"unknown upsample method {method!r}, expected one of {METHODS}")
    if rate == 1:
        return img
    if method == "nearest":
        return Image(np.repeat(np.repeat(img.data, rate, axis=0), rate, axis=1))
    taps = _cubic_taps if method == "bicubic" else _linear_taps
    ridx, rw = taps(img.height, rate)
    cidx, cw = taps(img.width, rate)
    out = _interp_axis0(img.data, ridx, rw)
    out = _interp_axis0(out.T, cidx, cw).T
    return Image(np.clip(out, 0.0, 1.0))


def composite(sr: Image, hr: Image, b: Bitmap) -> Image:
    """Take ground-truth pixels where the bitmap is set, reconstructed ones elsewhere."""
    if sr.shape != hr.shape or sr.shape != b.shape:
        raise ValidationError(
            f"composite inputs disagree on dimensions: {sr.shape}, {hr.shape}, {b.shape}"
        )
    return Image(np.where(b.bits, hr.data, sr.data))
