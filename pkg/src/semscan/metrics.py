"""Quality and evaluation measures.

Scalar metrics (L1, PSNR, SSIM, Pearson) operate on any two same-shaped
rasters.  Sparsification curves rank pixels by an estimated error map, zero
the true error at the top fraction, and report the mean error left over,
which measures how well the estimator orders pixels by actual error.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ValidationError
from .raster import ErrorMap

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class SparsificationCurve:
    """Mean remaining error after zeroing the top fraction of ranked pixels."""

    fractions: tuple[float, ...]
    residuals: tuple[float, ...]

    def __post_init__(self):
        if len(self.fractions) != len(self.residuals):
            raise ValidationError("fractions and residuals differ in length")
        fr = self.fractions
        if any(f < 0.0 or f > 1.0 for f in fr):
            raise ValidationError("fractions must lie in [0, 1]")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValidationError("fractions must be strictly ascending")
        if fr and fr[-1] == 1.0 and self.residuals[-1] != 0.0:
            raise ValidationError("residual at fraction 1.0 must be 0")


def _check_dims(a, b) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"metric inputs disagree on dimensions: {a.shape} vs {b.shape}")


def l1_loss(a, b) -> float:
    """Mean absolute per-pixel difference."""
    _check_dims(a, b)
    return float(np.abs(a.data - b.data).mean())


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB over dynamic range 1.0; inf when equal."""
    _check_dims(a, b)
    diff = a.data - b.data
    mse = float((diff * diff).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _local_mean(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    # border mode is irrelevant: the padded region is cropped away below
    y = correlate1d(x, window, axis=0, mode="reflect")
    y = correlate1d(y, window, axis=1, mode="reflect")
    pad = window.size // 2
    return y[pad:-pad, pad:-pad]


def ssim(a, b) -> float:
    """Mean local structural similarity over all fully interior windows.

    11x11 Gaussian window (sigma 1.5), stabilizers C1 = 0.01^2 and
    C2 = 0.03^2 on dynamic range [0, 1].
    """
    _check_dims(a, b)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValidationError(
            f"image {a.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    x, y = a.data, b.data
    mu_x = _local_mean(x, w)
    mu_y = _local_mean(y, w)
    var_x = _local_mean(x * x, w) - mu_x * mu_x
    var_y = _local_mean(y * y, w) - mu_y * mu_y
    cov = _local_mean(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float((num / den).mean())


def pearson(a, b) -> float:
    """Sample Pearson correlation over all pixels."""
    _check_dims(a, b)
    x = a.data.ravel()
    y = b.data.ravel()
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ValidationError("correlation undefined: an input has zero variance")
    return float((dx @ dy) / math.sqrt(sx * sy))


def rank_descending(values: np.ndarray) -> np.ndarray:
    """Indices sorting values high to low, ties broken by row-major index."""
    return np.argsort(-values.ravel(), kind="stable")


def sparsification_curve(estimated: ErrorMap, truth: ErrorMap, fractions) -> SparsificationCurve:
    """Residual mean truth error after zeroing the top floor(f*N) pixels
    ranked by the estimated map, for each fraction f."""
    _check_dims(estimated, truth)
    order = rank_descending(estimated.data)
    ranked_truth = truth.data.ravel()[order]
    prefix = np.concatenate([[0.0], np.cumsum(ranked_truth)])
    total = prefix[-1]
    n = order.size
    residuals = []
    for f in fractions:
        zeroed = int(math.floor(f * n))
        residuals.append(float((total - prefix[zeroed]) / n))
    return SparsificationCurve(tuple(float(f) for f in fractions), tuple(residuals))


def default_fractions() -> tuple[float, ...]:
    """0 to 0.10 in steps of 0.01, then 0.15 to 1.0 in steps of 0.05."""
    steps = list(range(0, 11)) + list(range(15, 101, 5))
    return tuple(i / 100.0 for i in steps)


def write_curves_csv(path, fractions, columns: dict) -> None:
    """CSV with a `fraction` column followed by one residual column per estimator."""
    names = list(columns)
    for name in names:
        if len(columns[name]) != len(fractions):
            raise ValidationError(f"column {name!r} length does not match fractions")
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fraction"] + names)
        for i, f in enumerate(fractions):
            writer.writerow([repr(float(f))] + [repr(float(columns[n][i])) for n in names])
