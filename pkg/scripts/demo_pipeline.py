#!/usr/bin/env python3
"""End-to-end demo: synthesize a specimen image, sweep speedup factors with
the oracle error estimator, and print the speedup/quality table."""

import argparse
import tempfile
from pathlib import Path

from make_synthetic import em_tile

from semscan import PipelineConfig, save_image, sweep_speedup


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tile", type=int, default=16)
    parser.add_argument("--factors", default="3,5,7,10,13")
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    out_dir = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="semscan_"))
    out_dir.mkdir(parents=True, exist_ok=True)
    hr_path = out_dir / "specimen.pgm"
    save_image(em_tile(args.seed, args.size), hr_path)

    cfg = PipelineConfig(
        hr_path=str(hr_path),
        total_scan_rate=0.25,
        downsample_rate=4,
        estimator="oracle",
        sampler="wdpp",
        tile=args.tile,
        seed=args.seed,
    )
    factors = [float(f) for f in args.factors.split(",")]
    reports = sweep_speedup(cfg, factors, out_dir=out_dir)

    print(f"{'speedup':>8} {'rate':>8} {'L1':>8} {'SSIM':>7} {'PSNR':>7}")
    for f, rep in zip(factors, reports):
        print(
            f"{f:>8.1f} {rep.total_scan_rate:>8.4f} {rep.residual_l1:>8.4f} "
            f"{rep.ssim:>7.3f} {rep.psnr:>7.2f}"
        )
    print(f"artifacts in {out_dir}")


if __name__ == "__main__":
    main()
