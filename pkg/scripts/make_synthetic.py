#!/usr/bin/env python3
"""Generate synthetic EM-like grayscale tiles (PGM) for pipeline experiments.

Each tile mixes a smooth texture, dark membrane-like random-walk curves, and
a few round organelle blobs, which is enough structure for reconstruction
error to concentrate at edges the way it does on real micrographs.
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.ndimage import binary_dilation, gaussian_filter

from semscan import Image, save_image


def em_tile(seed: int, size: int) -> Image:
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


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--count", type=int, default=60)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        save_image(em_tile(args.seed + i, args.size), out / f"tile_{i:04d}.pgm")
    print(f"wrote {args.count} {args.size}x{args.size} tiles to {out}")


if __name__ == "__main__":
    main()
