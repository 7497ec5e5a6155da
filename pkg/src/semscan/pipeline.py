"""End-to-end acquisition runs: initial scan, reconstruction, error
estimation, rescan sampling, compositing, and speedup accounting.

A run is configured by a flat ``key = value`` text file (see CONFIG_FIELDS
for the accepted keys).  Scan rates are fractions of the pixel count; the
speedup factor is their reciprocal.  Compute time is excluded from speedup
accounting and recorded separately in the human-readable summary, so the
machine-readable CSV stays byte-stable across runs.
"""

import csv
import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .metrics import l1_loss, psnr, ssim
from .raster import (
    Bitmap,
    ErrorMap,
    Image,
    bitmap_to_pbm,
    downsample_nearest,
    load_image,
    save_image,
    scan_lattice,
)
from .reconstruct import METHODS, composite, upsample
from .saliency import (
    entropy_saliency,
    gradient_saliency,
    load_estimated_error,
    load_probability_map,
    residual_error,
)
from .wdpp import SampleBudget, random_bitmap, tiled_wdpp_bitmap, topk_bitmap

SAMPLERS = ("wdpp", "topk", "random")
BUILTIN_ESTIMATORS = ("oracle", "gradient", "entropy")

REPORT_COLUMNS = (
    "initial_scan_rate",
    "rescan_rate",
    "total_scan_rate",
    "speedup_factor",
    "residual_l1",
    "psnr",
    "ssim",
    "cost_C",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Configuration of one acquisition run."""

    hr_path: str
    total_scan_rate: float
    downsample_rate: int = 4
    reconstruction: str = "bicubic"  # interpolation method or path to a precomputed image
    estimator: str = "oracle"  # oracle | gradient | entropy | path to an EMAP file
    roi: tuple[str, str] | None = None  # ROI maps for the ground truth and reconstruction
    sampler: str = "wdpp"
    gamma: float = 2.0
    sigma_s: float = 2.0
    tile: int = 32
    seed: int = 0
    lambda_: float = 0.0

    def __post_init__(self):
        r = self.downsample_rate
        if r < 1:
            raise ValidationError(f"downsample_rate must be >= 1, got {r}")
        if not (0.0 < self.total_scan_rate <= 1.0):
            raise ValidationError(
                f"total_scan_rate must lie in (0, 1], got {self.total_scan_rate}"
            )
        if self.total_scan_rate + 1e-12 < 1.0 / (r * r):
            raise ValidationError(
                f"total_scan_rate {self.total_scan_rate} is below the initial-scan "
                f"rate 1/{r * r} already spent by the low-resolution pass"
            )
        if self.sampler not in SAMPLERS:
            raise ValidationError(f"unknown sampler {self.sampler!r}, expected one of {SAMPLERS}")
        if self.estimator == "entropy" and self.roi is None:
            raise ValidationError("the entropy estimator needs roi maps to take entropy of")
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValidationError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (math.isfinite(self.sigma_s) and self.sigma_s > 0.0):
            raise ValidationError(f"sigma_s must be finite and > 0, got {self.sigma_s}")
        if self.tile < 1:
            raise ValidationError(f"tile must be >= 1, got {self.tile}")
        if not (math.isfinite(self.lambda_) and self.lambda_ >= 0.0):
            raise ValidationError(f"lambda must be finite and >= 0, got {self.lambda_}")


def _parse_roi(value: str) -> tuple[str, str]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ValidationError(f"roi must name two files separated by a comma, got {value!r}")
    return (parts[0], parts[1])


# config key -> (dataclass attribute, converter)
CONFIG_FIELDS = {
    "hr_path": ("hr_path", str),
    "downsample_rate": ("downsample_rate", int),
    "reconstruction": ("reconstruction", str),
    "estimator": ("estimator", str),
    "roi": ("roi", _parse_roi),
    "sampler": ("sampler", str),
    "gamma": ("gamma", float),
    "sigma_s": ("sigma_s", float),
    "tile": ("tile", int),
    "seed": ("seed", int),
    "total_scan_rate": ("total_scan_rate", float),
    "lambda": ("lambda_", float),
}


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines into PipelineConfig keyword arguments.

    Blank lines and lines starting with ``#`` are skipped; unknown and
    duplicate keys are errors.
    """
    kwargs = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno} is not of the form key = value: {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_FIELDS:
            raise ValidationError(f"unknown config key {key!r} on line {lineno}")
        if key in seen:
            raise ValidationError(f"duplicate config key {key!r} on line {lineno}")
        seen.add(key)
        attr, convert = CONFIG_FIELDS[key]
        try:
            kwargs[attr] = convert(value)
        except ValueError as exc:
            raise ValidationError(f"bad value for config key {key!r}: {value!r}") from exc
    return kwargs


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file and apply override values (already-parsed strings)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such config file: {path}")
    kwargs = parse_config(path.read_text(encoding="utf-8"))
    for key, value in (overrides or {}).items():
        if key not in CONFIG_FIELDS:
            raise ValidationError(f"unknown config key {key!r}")
        attr, convert = CONFIG_FIELDS[key]
        kwargs[attr] = convert(value) if isinstance(value, str) else value
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"incomplete config: {exc}") from exc


@dataclass(frozen=True)
class AcquisitionReport:
    """Per-run record of scan rates, speedup, and residual quality."""

    initial_scan_rate: float
    rescan_rate: float
    total_scan_rate: float
    speedup_factor: float
    residual_l1: float
    psnr: float
    ssim: float
    cost_C: float
    wall_clock_s: float
    artifacts: dict

    def __post_init__(self):
        if abs(self.total_scan_rate - (self.initial_scan_rate + self.rescan_rate)) > 1e-12:
            raise ValidationError("scan rates do not add up")
        if abs(self.speedup_factor * self.total_scan_rate - 1.0) > 1e-12:
            raise ValidationError("speedup factor is not the reciprocal total rate")

    def row(self) -> list[float]:
        return [getattr(self, name) for name in REPORT_COLUMNS]


def acquisition_cost(hr: Image, out: Image, b_total: Bitmap, lambda_: float) -> float:
    """Residual L1 plus lambda times the scanned-pixel fraction."""
    if hr.shape != out.shape or hr.shape != b_total.shape:
        raise ValidationError(
            f"cost inputs disagree on dimensions: {hr.shape}, {out.shape}, {b_total.shape}"
        )
    return l1_loss(hr, out) + lambda_ * (b_total.count / b_total.bits.size)


def _reconstruct(cfg: PipelineConfig, hr: Image, lr: Image) -> Image:
    if cfg.reconstruction in METHODS:
        sr = upsample(lr, cfg.downsample_rate, cfg.reconstruction)
        # ceil-sized low-res grids upsample past the original frame
        if sr.shape != hr.shape:
            sr = Image(sr.data[: hr.height, : hr.width])
        return sr
    sr = load_image(cfg.reconstruction)
    if sr.shape != hr.shape:
        raise ValidationError(
            f"precomputed reconstruction {cfg.reconstruction} has shape {sr.shape}, "
            f"expected {hr.shape}"
        )
    return sr


def _estimate(cfg: PipelineConfig, hr: Image, sr: Image) -> ErrorMap:
    roi_hr = roi_sr = None
    if cfg.roi is not None:
        roi_hr = load_probability_map(cfg.roi[0])
        roi_sr = load_probability_map(cfg.roi[1])
        if roi_hr.shape != hr.shape or roi_sr.shape != hr.shape:
            raise ValidationError(
                f"roi maps {roi_hr.shape}/{roi_sr.shape} do not match image {hr.shape}"
            )
    if cfg.estimator == "oracle":
        if roi_hr is not None:
            return residual_error(roi_hr, roi_sr)
        return residual_error(hr, sr)
    if cfg.estimator == "gradient":
        return gradient_saliency(sr)
    if cfg.estimator == "entropy":
        return entropy_saliency(roi_sr)
    emap = load_estimated_error(cfg.estimator)
    if emap.shape != hr.shape:
        raise ValidationError(
            f"estimated error map {cfg.estimator} has shape {emap.shape}, expected {hr.shape}"
        )
    return emap


def rescan_budget(cfg: PipelineConfig, n_pixels: int) -> int:
    """Rescan pixel count implied by the requested total scan rate."""
    r = cfg.downsample_rate
    return int(round((cfg.total_scan_rate - 1.0 / (r * r)) * n_pixels))


def run_acquisition(
    cfg: PipelineConfig, out_dir=None, threads: int = 1
) -> AcquisitionReport:
    """Execute one full acquisition simulation.

    When `out_dir` is given, the composited output image, the total-scan
    bitmap, a one-row CSV report, and a human-readable summary are written
    there.  SSIM is recorded as NaN for images smaller than its window.
    """
    started = time.perf_counter()
    hr = load_image(cfg.hr_path)
    n = hr.width * hr.height
    lr = downsample_nearest(hr, cfg.downsample_rate)
    sr = _reconstruct(cfg, hr, lr)
    lattice = scan_lattice(hr.width, hr.height, cfg.downsample_rate)

    k = rescan_budget(cfg, n)
    if k < 0:
        raise ValidationError(f"negative rescan budget {k}")
    if k > n - lattice.count:
        raise ValidationError(
            f"rescan budget {k} exceeds the {n - lattice.count} pixels outside the lattice"
        )

    estimated = _estimate(cfg, hr, sr)
    # budget never goes to pixels the initial scan already collected
    masked = ErrorMap(np.where(lattice.bits, 0.0, estimated.data))
    if cfg.sampler == "wdpp":
        rescan = tiled_wdpp_bitmap(
            masked,
            SampleBudget(k=k, tile=cfg.tile, seed=cfg.seed),
            cfg.gamma,
            cfg.sigma_s,
            exclude=lattice,
            threads=threads,
        )
    elif cfg.sampler == "topk":
        rescan = topk_bitmap(masked, k, exclude=lattice)
    else:
        rescan = random_bitmap(hr.width, hr.height, k, cfg.seed, exclude=lattice)

    total = Bitmap(lattice.bits | rescan.bits)
    out = composite(sr, hr, total)

    can_ssim = hr.height >= 11 and hr.width >= 11
    report = AcquisitionReport(
        initial_scan_rate=lattice.count / n,
        rescan_rate=rescan.count / n,
        total_scan_rate=total.count / n,
        speedup_factor=n / total.count,
        residual_l1=l1_loss(hr, out),
        psnr=psnr(hr, out),
        ssim=ssim(hr, out) if can_ssim else math.nan,
        cost_C=acquisition_cost(hr, out, total, cfg.lambda_),
        wall_clock_s=time.perf_counter() - started,
        artifacts={},
    )
    if out_dir is not None:
        report = dataclasses.replace(
            report, artifacts=_emit_artifacts(out_dir, cfg, out, total, report)
        )
    return report


def _emit_artifacts(
    out_dir, cfg: PipelineConfig, out: Image, total: Bitmap, report: AcquisitionReport
) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "i_out": out_dir / "i_out.pgm",
        "total_scan": out_dir / "total_scan.pbm",
        "report": out_dir / "report.csv",
        "summary": out_dir / "summary.txt",
    }
    save_image(out, paths["i_out"])
    bitmap_to_pbm(total, paths["total_scan"])
    write_reports_csv(paths["report"], [report])
    lines = [f"acquisition run on {cfg.hr_path}"]
    lines += [f"  {name} = {value!r}" for name, value in _summary_fields(cfg, report)]
    paths["summary"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {name: str(p) for name, p in paths.items()}


def _summary_fields(cfg: PipelineConfig, report: AcquisitionReport):
    for field in dataclasses.fields(cfg):
        yield field.name, getattr(cfg, field.name)
    for name in REPORT_COLUMNS:
        yield name, getattr(report, name)
    yield "wall_clock_s", report.wall_clock_s


def write_reports_csv(path, reports, factors=None) -> None:
    """One CSV row per report; wall-clock time is deliberately not included."""
    header = list(REPORT_COLUMNS)
    if factors is not None:
        header = ["factor"] + header
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, report in enumerate(reports):
            row = report.row()
            if factors is not None:
                row = [factors[i]] + row
            writer.writerow([repr(float(v)) for v in row])


def sweep_speedup(
    cfg: PipelineConfig, factors, out_dir=None, threads: int = 1
) -> list[AcquisitionReport]:
    """Run the pipeline once per target speedup factor (total rate 1/factor)."""
    r2 = cfg.downsample_rate**2
    for f in factors:
        if f < 1.0 or f > r2 + 1e-9:
            raise ValidationError(
                f"infeasible speedup factor {f}: must lie in [1, {r2}] for "
                f"downsample rate {cfg.downsample_rate}"
            )
    configs = [dataclasses.replace(cfg, total_scan_rate=1.0 / f) for f in factors]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_acquisition, configs))
    else:
        reports = [run_acquisition(c) for c in configs]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_reports_csv(out_dir / "sweep.csv", reports, factors=list(factors))
    return reports


def evaluate_roi(roi_hr_path, roi_out_path) -> dict:
    """Residual between the ROI maps of the ground truth and the final output."""
    roi_hr = load_probability_map(roi_hr_path)
    roi_out = load_probability_map(roi_out_path)
    if roi_hr.shape != roi_out.shape:
        raise ValidationError(
            f"roi maps disagree on dimensions: {roi_hr.shape} vs {roi_out.shape}"
        )
    return {"residual_l1": l1_loss(roi_hr, roi_out)}
