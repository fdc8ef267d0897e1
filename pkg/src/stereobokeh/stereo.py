"""Stereo disparity estimation from a rectified pair.

Pipeline: census-transform matching costs over 18 disparity bins at 1/8
resolution, a soft (differentiable) argmin readout with sub-bin precision,
then hierarchical upsampling with joint-bilateral refinement guided by the
reference image. Classical throughout: no learned components, no training.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from sklearn.base import BaseEstimator

from .primitives import luma, resize_bilinear
from .validation import check_disparity, check_same_size, check_unit_range

DISPARITY_BINS = 18
MAX_COARSE_DISPARITY = DISPARITY_BINS - 1

# Per-bin costs are averaged over this square neighborhood before the soft
# argmin; single-pixel census codes collide by chance often enough to pull
# the softmax off its bin without it.
_COST_AGGREGATION = 3


@dataclass
class StereoConfig:
    """Tuning knobs for the classical matching pipeline."""

    downscale_factor: int = 8
    census_window: int = 7
    refinement_radius: int = 4
    refinement_range_sigma: float = 0.1

    def __post_init__(self):
        f = self.downscale_factor
        if f < 2 or (f & (f - 1)) != 0:
            raise ValueError(f"downscale_factor must be a power of two >= 2, got {f}")
        if self.census_window < 3 or self.census_window % 2 == 0:
            raise ValueError(
                f"census_window must be odd and >= 3, got {self.census_window}"
            )
        if self.refinement_radius < 1:
            raise ValueError("refinement_radius must be >= 1")
        if self.refinement_range_sigma <= 0:
            raise ValueError("refinement_range_sigma must be > 0")


def census_transform(gray: np.ndarray, window: int) -> np.ndarray:
    """Per-pixel census bit string: neighbor < center over a square window.

    Returns a boolean (H, W, window**2 - 1) array. Borders compare against
    edge-replicated neighbors.
    """
    half = window // 2
    padded = np.pad(gray, half, mode="edge")
    view = np.lib.stride_tricks.sliding_window_view(padded, (window, window))
    view = view.reshape(*gray.shape, window * window)
    center = window * window // 2
    bits = view < gray[..., np.newaxis]
    return np.ascontiguousarray(np.delete(bits, center, axis=-1))


def build_cost_volume(
    left: np.ndarray, right: np.ndarray, cfg: StereoConfig = None
) -> np.ndarray:
    """Census/Hamming matching costs over 18 bins at coarse resolution.

    Both images are downsampled by cfg.downscale_factor; cost[y, x, d] is the
    Hamming distance between the left census code at x and the right census
    code at x - d (shift along the epipolar row), averaged over a small
    spatial neighborhood. Shifts that fall outside the frame cost the
    maximum Hamming distance.
    """
    cfg = cfg or StereoConfig()
    left = check_unit_range(left, "left")
    right = check_unit_range(right, "right")
    check_same_size(left, right, "left", "right")
    h, w = left.shape[-2], left.shape[-1]
    f = cfg.downscale_factor
    cw, ch = math.ceil(w / f), math.ceil(h / f)
    if cw < DISPARITY_BINS:
        raise ValueError(
            f"image of width {w} is narrower than {DISPARITY_BINS} pixels at "
            f"1/{f} scale"
        )
    gray_l = resize_bilinear(luma(left), cw, ch)
    gray_r = resize_bilinear(luma(right), cw, ch)
    bits_l = census_transform(gray_l, cfg.census_window)
    bits_r = census_transform(gray_r, cfg.census_window)
    n_bits = bits_l.shape[-1]
    cost = np.full((ch, cw, DISPARITY_BINS), float(n_bits))
    for d in range(DISPARITY_BINS):
        if d >= cw:
            break
        if d == 0:
            ham = bits_l != bits_r
        else:
            ham = bits_l[:, d:] != bits_r[:, :-d]
        cost[:, d:, d] = ham.sum(axis=-1, dtype=np.int64)
    agg = uniform_filter(cost, size=(_COST_AGGREGATION, _COST_AGGREGATION, 1), mode="nearest")
    return np.clip(agg, 0.0, None)


def soft_argmin(cost: np.ndarray) -> np.ndarray:
    """Sub-bin disparity readout: softmax expectation over negated costs.

    Implements the shifted expectation sum(d * softmax(-cost), d=1..bins) - 1,
    yielding real disparities in [0, bins-1] in coarse-pixel units.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 3:
        raise ValueError(f"cost volume must be (H, W, bins), got shape {cost.shape}")
    if not np.all(np.isfinite(cost)) or cost.min() < 0:
        raise ValueError("cost volume must be finite and non-negative")
    shifted = cost - cost.min(axis=-1, keepdims=True)
    weights = np.exp(-shifted)
    weights /= weights.sum(axis=-1, keepdims=True)
    bins = np.arange(1, cost.shape[-1] + 1, dtype=np.float64)
    return weights @ bins - 1.0


def joint_bilateral_filter(
    values: np.ndarray,
    guide: np.ndarray,
    radius: int,
    sigma_range: float,
    sigma_spatial: float = None,
) -> np.ndarray:
    """Edge-aware smoothing of ``values`` steered by ``guide`` intensities."""
    values = check_disparity(values, "values")
    if sigma_spatial is None:
        sigma_spatial = max(radius, 1) / 2.0
    guide = np.asarray(guide, dtype=np.float64)
    planar_guide = guide[np.newaxis] if guide.ndim == 2 else guide
    check_same_size(values, planar_guide, "values", "guide")
    pad = radius
    vp = np.pad(values, pad, mode="edge")
    gp = np.pad(planar_guide, ((0, 0), (pad, pad), (pad, pad)), mode="edge")
    h, w = values.shape
    num = np.zeros_like(values)
    den = np.zeros_like(values)
    inv_2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            sv = vp[pad + dy : pad + dy + h, pad + dx : pad + dx + w]
            sg = gp[:, pad + dy : pad + dy + h, pad + dx : pad + dx + w]
            dist2 = np.mean((planar_guide - sg) ** 2, axis=0)
            weight = math.exp(-(dy * dy + dx * dx) * inv_2ss) * np.exp(
                -dist2 * inv_2sr
            )
            num += weight * sv
            den += weight
    return num / den


def upsample_refine(
    coarse: np.ndarray, guide: np.ndarray, cfg: StereoConfig = None
) -> np.ndarray:
    """Hierarchical 2x upsampling of a coarse disparity map with RGB guidance.

    Each level doubles the resolution and the disparity units, then applies a
    joint-bilateral filter against the guide at that scale. Guide dimensions
    must be exactly coarse dimensions times cfg.downscale_factor. Output is
    clamped to the representable full-resolution range.
    """
    cfg = cfg or StereoConfig()
    coarse = check_disparity(coarse, "coarse")
    guide = check_unit_range(guide, "guide")
    ch, cw = coarse.shape
    gh, gw = guide.shape[-2], guide.shape[-1]
    f = cfg.downscale_factor
    if (gh, gw) != (ch * f, cw * f):
        raise ValueError(
            f"guide {gw}x{gh} does not match coarse {cw}x{ch} times factor {f}"
        )
    disp = coarse
    levels = int(round(math.log2(f)))
    for level in range(1, levels + 1):
        scale = 2**level
        tw, th = cw * scale, ch * scale
        disp = resize_bilinear(disp, tw, th) * 2.0
        guide_level = guide if scale == f else resize_bilinear(guide, tw, th)
        disp = joint_bilateral_filter(
            disp,
            guide_level,
            radius=cfg.refinement_radius,
            sigma_range=cfg.refinement_range_sigma,
        )
    return np.clip(disp, 0.0, float(f * MAX_COARSE_DISPARITY))


def estimate_disparity(
    left: np.ndarray, right: np.ndarray, cfg: StereoConfig = None
) -> np.ndarray:
    """Full-resolution disparity from a rectified stereo pair, in pixels.

    Composition of build_cost_volume, soft_argmin, and upsample_refine.
    Dimensions that are not a multiple of the downscale factor are handled by
    matching on a slightly stretched frame and rescaling the result (the
    disparity unit correction is folded in).
    """
    cfg = cfg or StereoConfig()
    left = check_unit_range(left, "left")
    right = check_unit_range(right, "right")
    check_same_size(left, right, "left", "right")
    h, w = left.shape[-2], left.shape[-1]
    f = cfg.downscale_factor
    cw, ch = math.ceil(w / f), math.ceil(h / f)
    ww, wh = cw * f, ch * f
    if (ww, wh) != (w, h):
        left_w = resize_bilinear(left, ww, wh)
        right_w = resize_bilinear(right, ww, wh)
    else:
        left_w, right_w = left, right
    cost = build_cost_volume(left_w, right_w, cfg)
    coarse = soft_argmin(cost)
    full = upsample_refine(coarse, left_w, cfg)
    if (ww, wh) != (w, h):
        full = resize_bilinear(full, w, h) * (w / ww)
    return full


class DisparityEstimator(BaseEstimator):
    """Estimator-style facade over the classical stereo pipeline.

    Stateless: ``fit`` is a no-op kept for pipeline compatibility, and
    ``predict(left, right)`` returns the full-resolution disparity map.
    """

    def __init__(
        self,
        downscale_factor: int = 8,
        census_window: int = 7,
        refinement_radius: int = 4,
        refinement_range_sigma: float = 0.1,
    ):
        self.downscale_factor = downscale_factor
        self.census_window = census_window
        self.refinement_radius = refinement_radius
        self.refinement_range_sigma = refinement_range_sigma

    def _config(self) -> StereoConfig:
        return StereoConfig(
            downscale_factor=self.downscale_factor,
            census_window=self.census_window,
            refinement_radius=self.refinement_radius,
            refinement_range_sigma=self.refinement_range_sigma,
        )

    def fit(self, X=None, y=None):
        return self

    def predict(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return estimate_disparity(left, right, self._config())
