import numpy as np
import pytest
from scipy.ndimage import binary_dilation, gaussian_filter

from semscan import Image


def em_like_image(seed: int, size: int = 64) -> Image:
    """Synthetic electron-microscopy-style tile: smooth texture, dark
    membrane-like curves, and a few round organelle blobs."""
    rng = np.random.default_rng(seed)
    tex = gaussian_filter(rng.random((size, size)), 2.0)
    tex = (tex - tex.min()) / (np.ptp(tex) + 1e-12)
    img = 0.35 + 0.4 * tex

    walls = np.zeros((size, size), dtype=bool)
    for _ in range(max(3, size // 12)):
        fi, fj = rng.uniform(0, size, 2)
        di, dj = rng.standard_normal(2)
        for _ in range(size * 3):
            walls[int(fi) % size, int(fj) % size] = True
            di += 0.4 * rng.standard_normal()
            dj += 0.4 * rng.standard_normal()
            norm = np.hypot(di, dj) + 1e-9
            di, dj = di / norm, dj / norm
            fi += di
            fj += dj
    img = np.where(binary_dilation(walls), 0.06 + 0.06 * tex, img)

    ii, jj = np.mgrid[0:size, 0:size]
    for _ in range(size // 16):
        ci, cj = rng.uniform(0, size, 2)
        radius = rng.uniform(2, size / 12)
        blob = (ii - ci) ** 2 + (jj - cj) ** 2 < radius**2
        img = np.where(blob, 0.75 + 0.2 * tex, img)
    return Image(np.clip(img, 0.0, 1.0))


@pytest.fixture
def em_image() -> Image:
    return em_like_image(0)
