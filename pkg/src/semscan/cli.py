"""Command-line surface: scan runs, sweeps, sampler debugging, curve generation.

Exit codes: 0 success, 1 usage, 2 validation, 3 I/O.  Diagnostics go to
stderr; CSV and raster data go to files.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .metrics import default_fractions, pearson, sparsification_curve, write_curves_csv
from .pipeline import (
    CONFIG_FIELDS,
    evaluate_roi,
    load_config,
    run_acquisition,
    sweep_speedup,
)
from .raster import ErrorMap, bitmap_to_pbm, load_image, read_emap
from .saliency import (
    entropy_saliency,
    gradient_saliency,
    load_estimated_error,
    load_probability_map,
    residual_error,
)
from .wdpp import SampleBudget, tiled_wdpp_bitmap

PAPER_SWEEP_FACTORS = (3.0, 5.0, 7.0, 10.0, 13.0)


class _Parser(argparse.ArgumentParser):
    # usage failures exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    for key in CONFIG_FIELDS:
        parser.add_argument(f"--{key}", default=None, help=f"override config key {key}")


def _collect_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for key in CONFIG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad {what} list: {text!r}") from exc


def _cmd_scan(args) -> int:
    cfg = load_config(args.config, _collect_overrides(args))
    run_acquisition(cfg, out_dir=args.out_dir, threads=args.threads)
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config, _collect_overrides(args))
    factors = _parse_floats(args.factors, "factor") if args.factors else list(PAPER_SWEEP_FACTORS)
    sweep_speedup(cfg, factors, out_dir=args.out_dir, threads=args.threads)
    return 0


def _cmd_sample(args) -> int:
    emap = read_emap(args.emap)
    n = emap.data.size
    if args.k > n:
        raise ValidationError(f"k={args.k} exceeds the {n} pixels of the map")
    budget = SampleBudget(k=args.k, tile=args.tile, seed=args.seed)
    bitmap = tiled_wdpp_bitmap(
        emap, budget, args.gamma, args.sigma_s, threads=args.threads
    )
    bitmap_to_pbm(bitmap, args.out)
    selected = emap.data[bitmap.bits]
    mean_saliency = float(selected.mean()) if selected.size else 0.0
    print(f"popcount = {bitmap.count}")
    print(f"mean_saliency = {mean_saliency!r}")
    return 0


def _estimator_name(spec: str) -> str:
    if spec in ("oracle", "gradient", "random"):
        return spec
    if spec.startswith("entropy="):
        return "entropy"
    paths = spec[5:] if spec.startswith("emap=") else spec
    return Path(paths.split(",")[0]).stem


def _estimator_maps(spec: str, truths, srs, seed: int) -> list[np.ndarray]:
    """Flat estimated-saliency vector per image for one estimator spec."""
    if spec == "oracle":
        return [t.data.ravel() for t in truths]
    if spec == "gradient":
        return [gradient_saliency(sr).data.ravel() for sr in srs]
    if spec == "random":
        rng = np.random.default_rng(seed)
        return [rng.random(t.data.size) for t in truths]
    if spec.startswith("entropy="):
        paths = spec[len("entropy=") :].split(",")
        if len(paths) != len(truths):
            raise ValidationError(
                f"estimator {spec!r} names {len(paths)} maps for {len(truths)} images"
            )
        return [entropy_saliency(load_probability_map(p)).data.ravel() for p in paths]
    paths = (spec[5:] if spec.startswith("emap=") else spec).split(",")
    if len(paths) != len(truths):
        raise ValidationError(
            f"estimator {spec!r} names {len(paths)} maps for {len(truths)} images"
        )
    return [load_estimated_error(p).data.ravel() for p in paths]


def _cmd_curves(args) -> int:
    if len(args.hr) != len(args.sr):
        raise ValidationError(
            f"{len(args.hr)} ground-truth images but {len(args.sr)} reconstructions"
        )
    hrs = [load_image(p) for p in args.hr]
    srs = [load_image(p) for p in args.sr]
    truths = [residual_error(hr, sr) for hr, sr in zip(hrs, srs)]
    for i, (hr, sr) in enumerate(zip(hrs, srs)):
        if hr.shape != sr.shape:
            raise ValidationError(f"image pair {i} disagrees on dimensions")

    fractions = (
        tuple(_parse_floats(args.fractions, "fraction"))
        if args.fractions
        else default_fractions()
    )
    pooled_truth = ErrorMap(np.concatenate([t.data.ravel() for t in truths])[None, :])

    columns = {}
    correlations = []
    for spec in args.estimators:
        name = _estimator_name(spec)
        if name in columns:
            raise ValidationError(f"duplicate estimator column name {name!r}")
        flats = _estimator_maps(spec, truths, srs, args.seed)
        for i, flat in enumerate(flats):
            if flat.size != truths[i].data.size:
                raise ValidationError(f"estimator {spec!r} map {i} has the wrong size")
        pooled_est = ErrorMap(np.concatenate(flats)[None, :])
        curve = sparsification_curve(pooled_est, pooled_truth, fractions)
        columns[name] = curve.residuals
        per_image = [
            pearson(ErrorMap(f[None, :]), ErrorMap(t.data.ravel()[None, :]))
            for f, t in zip(flats, truths)
        ]
        correlations.append(
            (name, pearson(pooled_est, pooled_truth), sum(per_image) / len(per_image))
        )

    write_curves_csv(args.out_csv, fractions, columns)
    if args.corr_csv:
        with open(args.corr_csv, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["estimator", "pearson_pooled", "pearson_per_image_mean"])
            for name, pooled, mean in correlations:
                writer.writerow([name, repr(pooled), repr(mean)])
    return 0


def _cmd_eval_roi(args) -> int:
    result = evaluate_roi(args.roi_hr, args.roi_out)
    if args.out_csv:
        with open(args.out_csv, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(result))
            writer.writerow([repr(v) for v in result.values()])
    print(f"residual_l1 = {result['residual_l1']!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semscan", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    scan = sub.add_parser("scan", parents=[], help="run one acquisition simulation")
    scan.add_argument("--config", required=True)
    scan.add_argument("--out-dir", required=True)
    scan.add_argument("--threads", type=int, default=1)
    _add_override_flags(scan)
    scan.set_defaults(func=_cmd_scan)

    sweep = sub.add_parser("sweep", help="run one acquisition per target speedup factor")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out-dir", required=True)
    sweep.add_argument("--threads", type=int, default=1)
    sweep.add_argument("--factors", default=None, help="comma-separated speedup factors")
    _add_override_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    sample = sub.add_parser("sample", help="draw a rescan bitmap from a saliency map")
    sample.add_argument("--emap", required=True)
    sample.add_argument("--k", type=int, required=True)
    sample.add_argument("--gamma", type=float, default=2.0)
    sample.add_argument("--sigma_s", type=float, default=2.0)
    sample.add_argument("--tile", type=int, default=32)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--threads", type=int, default=1)
    sample.add_argument("--out", required=True, help="output PBM path")
    sample.set_defaults(func=_cmd_sample)

    curves = sub.add_parser("curves", help="sparsification error curves per estimator")
    curves.add_argument("--hr", nargs="+", required=True)
    curves.add_argument("--sr", nargs="+", required=True)
    curves.add_argument(
        "--estimators",
        nargs="+",
        required=True,
        help="oracle | gradient | random | entropy=<maps> | emap=<maps> | <emap paths>",
    )
    curves.add_argument("--out-csv", required=True)
    curves.add_argument("--corr-csv", default=None, help="also write pixel-wise correlations")
    curves.add_argument("--fractions", default=None, help="comma-separated fractions")
    curves.add_argument("--seed", type=int, default=0)
    curves.set_defaults(func=_cmd_curves)

    roi = sub.add_parser("eval-roi", help="residual between ROI maps of truth and output")
    roi.add_argument("--roi-hr", required=True)
    roi.add_argument("--roi-out", required=True)
    roi.add_argument("--out-csv", default=None)
    roi.set_defaults(func=_cmd_eval_roi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
