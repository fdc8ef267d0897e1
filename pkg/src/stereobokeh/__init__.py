"""Stereo refocusing toolkit.

Estimate disparity from a rectified stereo pair, then render synthetic
depth-of-field by sweeping the scene as disparity layers. Includes quality
metrics, a correlation tracker that follows a subject with the focal plane,
a benchmark harness, a CLI, and an HTTP service.
"""

from .bench import BenchReport, bench, make_scene
from .image_io import (
    colorize_disparity,
    load_disparity_pfm,
    load_image,
    save_disparity_pfm,
    save_image,
)
from .metrics import (
    MetricReport,
    NiqeModel,
    evaluate_refocus,
    load_default_model,
    niqe,
    psnr,
    ssim,
)
from .primitives import convolve, disk_kernel, luma, resize_bilinear
from .refocus import (
    RefocusParams,
    Refocuser,
    adaptive_blur,
    focal_sweep,
    layer_mask,
    refocus,
    refocus_smooth_grad,
)
from .stereo import (
    DisparityEstimator,
    StereoConfig,
    build_cost_volume,
    estimate_disparity,
    soft_argmin,
    upsample_refine,
)
from .tracking import (
    CorrelationTracker,
    FocusSchedule,
    TrackedFrame,
    focus_from_box,
    track_and_refocus,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "CorrelationTracker",
    "DisparityEstimator",
    "FocusSchedule",
    "MetricReport",
    "NiqeModel",
    "RefocusParams",
    "Refocuser",
    "StereoConfig",
    "TrackedFrame",
    "adaptive_blur",
    "bench",
    "build_cost_volume",
    "colorize_disparity",
    "convolve",
    "disk_kernel",
    "estimate_disparity",
    "evaluate_refocus",
    "focal_sweep",
    "focus_from_box",
    "layer_mask",
    "load_default_model",
    "load_disparity_pfm",
    "load_image",
    "luma",
    "make_scene",
    "niqe",
    "psnr",
    "refocus",
    "refocus_smooth_grad",
    "resize_bilinear",
    "save_disparity_pfm",
    "save_image",
    "soft_argmin",
    "ssim",
    "track_and_refocus",
    "upsample_refine",
]
