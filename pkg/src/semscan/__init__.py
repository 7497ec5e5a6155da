"""Saliency-guided sparse rescan simulation for single-beam SEM acquisition.

The package simulates an adaptive acquisition loop against a stored
high-resolution image: a cheap decimated initial scan, reconstruction,
per-pixel error estimation, diversity-aware rescan sampling by a weighted
determinantal point process, compositing, and speedup/quality accounting.
"""

from .errors import FormatError, ValidationError
from .metrics import (
    SparsificationCurve,
    default_fractions,
    l1_loss,
    pearson,
    psnr,
    sparsification_curve,
    ssim,
)
from .pipeline import (
    AcquisitionReport,
    PipelineConfig,
    acquisition_cost,
    evaluate_roi,
    load_config,
    run_acquisition,
    sweep_speedup,
)
from .raster import (
    Bitmap,
    ErrorMap,
    Image,
    bitmap_to_pbm,
    downsample_nearest,
    load_image,
    pbm_to_bitmap,
    read_emap,
    save_image,
    scan_lattice,
    write_emap,
)
from .reconstruct import composite, upsample
from .saliency import (
    ProbabilityMap,
    Threshold,
    binarize,
    entropy_saliency,
    gradient_saliency,
    load_estimated_error,
    load_probability_map,
    mean_threshold,
    residual_error,
)
from .wdpp import (
    EigenBasis,
    KernelMatrix,
    SampleBudget,
    build_kernel,
    dpp_sample,
    eigendecompose,
    kdpp_sample,
    random_bitmap,
    tiled_wdpp_bitmap,
    topk_bitmap,
)

__version__ = "0.1.0"
