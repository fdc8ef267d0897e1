"""Disparity-driven synthetic refocusing.

The scene is swept as a stack of constant-disparity layers spaced one mask
half-width apart. Each layer is extracted with a (hard or smooth) disparity
mask, blurred with a disk kernel whose radius grows with the distance from
the focal plane, and composited front-most last. Dividing the composited
image by the composited mask renormalizes partial coverage at layer
boundaries.

The layer grid is anchored at the focal plane, so pixels whose disparity
equals the focal disparity pass through a zero-radius kernel and a binary
mask: the in-focus region is reproduced exactly in hard mode.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from .primitives import convolve, disk_kernel, resize_bilinear
from .stereo import estimate_disparity
from .validation import check_disparity, check_same_size, check_unit_range

COVERAGE_EPS = 1e-6


@dataclass
class RefocusParams:
    """Rendering controls for a single refocus pass.

    aperture sets both the layer spacing (1 / aperture) and the blur growth
    rate (radius = aperture * |layer - focal_plane|). kernel_cap bounds the
    convolution kernel side in pixels; None means blur at full resolution
    regardless of radius. d_min / d_max default to the disparity map extrema.
    """

    focal_plane: float
    aperture: float
    d_min: float = None
    d_max: float = None
    kernel_cap: int = None
    alpha: float = 1e3
    mode: str = "hard"

    def __post_init__(self):
        if not math.isfinite(self.focal_plane):
            raise ValueError("focal_plane must be finite")
        if not math.isfinite(self.aperture) or self.aperture <= 0:
            raise ValueError(f"aperture must be > 0, got {self.aperture}")
        if self.kernel_cap is not None:
            cap = self.kernel_cap
            if cap < 3 or cap % 2 == 0:
                raise ValueError(f"kernel_cap must be odd and >= 3, got {cap}")
        if self.alpha <= 0 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be a finite positive value, got {self.alpha}")
        if self.mode not in ("hard", "smooth"):
            raise ValueError(f"mode must be 'hard' or 'smooth', got {self.mode!r}")
        for name in ("d_min", "d_max"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{name} must be finite when given")
        if self.d_min is not None and self.d_max is not None:
            if self.d_min > self.d_max:
                raise ValueError("d_min must not exceed d_max")
        if self.d_min is not None and self.focal_plane < self.d_min:
            raise ValueError("focal_plane must lie within [d_min, d_max]")
        if self.d_max is not None and self.focal_plane > self.d_max:
            raise ValueError("focal_plane must lie within [d_min, d_max]")


def layer_mask(
    disparity: np.ndarray,
    plane: float,
    aperture: float,
    mode: str = "hard",
    alpha: float = 1e3,
) -> np.ndarray:
    """Membership of each pixel in the constant-disparity layer at ``plane``.

    Hard mode is the indicator of |disparity - plane| < 1/aperture; smooth
    mode replaces the indicator with a tanh sigmoid of sharpness ``alpha``
    so the mask stays differentiable in the disparity.
    """
    disparity = check_disparity(disparity, "disparity")
    dist = np.abs(disparity - plane)
    half_width = 1.0 / aperture
    if mode == "hard":
        return (dist < half_width).astype(np.float64)
    if mode == "smooth":
        return 0.5 + 0.5 * np.tanh(alpha * (half_width - dist))
    raise ValueError(f"mode must be 'hard' or 'smooth', got {mode!r}")


def adaptive_blur(img: np.ndarray, mask: np.ndarray, radius: float, kernel_cap: int = None):
    """Disk blur of a texture and its coverage mask, capped in kernel size.

    When the full-resolution kernel side 2*ceil(radius)+1 fits within
    kernel_cap (or no cap is set), convolves directly. Otherwise both arrays
    are downsampled by gamma = ceil(2*radius+1)/kernel_cap, blurred with a
    disk of radius/gamma, and upsampled back, keeping the cost roughly
    constant for any radius. Image and mask always see the identical kernel
    and scale so the mask normalization downstream stays consistent.
    """
    radius = float(radius)
    if radius < 0.0:
        raise ValueError("blur radius must be non-negative")
    if radius == 0.0:
        return (
            np.array(img, dtype=np.float64, copy=True),
            np.array(mask, dtype=np.float64, copy=True),
        )
    # One stacked pass keeps image and mask on the identical kernel and
    # scale, which the compositor's normalization depends on.
    tex = np.asarray(img, dtype=np.float64)
    planar = tex if tex.ndim == 3 else tex[None]
    stack = np.concatenate([planar, np.asarray(mask, dtype=np.float64)[None]], axis=0)
    side = 2 * math.ceil(radius) + 1
    if kernel_cap is None or side <= kernel_cap:
        out = convolve(stack, disk_kernel(radius))
    else:
        gamma = math.ceil(2.0 * radius + 1.0) / kernel_cap
        h, w = stack.shape[-2], stack.shape[-1]
        small_radius = radius / gamma
        floor_dim = math.ceil(small_radius) + 1
        dw = max(int(round(w / gamma)), floor_dim, 2)
        dh = max(int(round(h / gamma)), floor_dim, 2)
        small = convolve(resize_bilinear(stack, dw, dh), disk_kernel(small_radius))
        out = resize_bilinear(small, w, h)
    return (out[:-1] if tex.ndim == 3 else out[0]), out[-1]


def _plane_grid(params: RefocusParams, disparity: np.ndarray):
    """Layer disparities, far to near, spaced 1/aperture, through the focus.

    The grid is anchored at the focal plane and runs between the planes
    nearest the disparity extrema. Every value in [d_min, d_max] then sits
    within half a step of some plane, strictly inside its mask window, so
    the sweep covers the whole range without planes beyond the data.
    """
    d_min = params.d_min if params.d_min is not None else float(disparity.min())
    d_max = params.d_max if params.d_max is not None else float(disparity.max())
    if d_min > d_max:
        raise ValueError("d_min must not exceed d_max")
    a = params.aperture
    k_lo = round((d_min - params.focal_plane) * a)
    k_hi = round((d_max - params.focal_plane) * a)
    return [params.focal_plane + k / a for k in range(k_lo, k_hi + 1)]


def _layer_terms(img, disparity, params, plane, tangent):
    """Blurred mask and texture for one layer, with optional tangents.

    Returns None when the layer mask vanishes everywhere; skipping such a
    layer leaves the composite bit-identical because the blend weight is 0.
    """
    a = params.aperture
    half_width = 1.0 / a
    if params.mode == "hard":
        mask = (np.abs(disparity - plane) < half_width).astype(np.float64)
        mask_dot = None
    else:
        delta = disparity - plane
        t = np.tanh(params.alpha * (half_width - np.abs(delta)))
        mask = 0.5 + 0.5 * t
        if tangent is not None:
            mask_dot = -0.5 * params.alpha * (1.0 - t * t) * np.sign(delta) * tangent
    if not mask.any():
        return None
    radius = abs(a * (plane - params.focal_plane))
    blurred_tex, blurred_mask = adaptive_blur(img * mask, mask, radius, params.kernel_cap)
    if tangent is None:
        return blurred_mask, blurred_tex, None, None
    tex_dot, mdot = adaptive_blur(img * mask_dot, mask_dot, radius, params.kernel_cap)
    return blurred_mask, blurred_tex, mdot, tex_dot


def _sweep(img, disparity, params, tangent=None, threads=1):
    img = check_unit_range(img, "image")
    disparity = check_disparity(disparity, "disparity")
    check_same_size(img, disparity, "image", "disparity")
    planes = _plane_grid(params, disparity)
    acc_img = np.zeros_like(img)
    acc_mask = np.zeros(disparity.shape)
    acc_img_dot = np.zeros_like(img) if tangent is not None else None
    acc_mask_dot = np.zeros(disparity.shape) if tangent is not None else None
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(
                pool.map(
                    lambda p: _layer_terms(img, disparity, params, p, tangent), planes
                )
            )
    else:
        terms = (_layer_terms(img, disparity, params, p, tangent) for p in planes)
    for term in terms:
        if term is None:
            continue
        mb, tb, mb_dot, tb_dot = term
        keep = 1.0 - mb
        if tangent is not None:
            acc_img_dot = acc_img_dot * keep - acc_img * mb_dot + tb_dot
            acc_mask_dot = acc_mask_dot * keep - acc_mask * mb_dot + mb_dot
        acc_img = acc_img * keep + tb
        acc_mask = acc_mask * keep + mb
    covered = acc_mask > COVERAGE_EPS
    denom = np.maximum(acc_mask, COVERAGE_EPS)
    out = np.where(covered, acc_img / denom, img)
    if tangent is None:
        return np.clip(out, 0.0, 1.0), None
    out_dot = np.where(
        covered,
        (acc_img_dot * acc_mask - acc_img * acc_mask_dot) / (denom * denom),
        0.0,
    )
    out_dot = np.where((out > 0.0) & (out < 1.0), out_dot, 0.0)
    return np.clip(out, 0.0, 1.0), out_dot


def refocus(
    img: np.ndarray,
    disparity: np.ndarray,
    params: RefocusParams,
    threads: int = 1,
) -> np.ndarray:
    """Render ``img`` with a synthetic depth of field defined by ``params``.

    threads > 1 evaluates the per-layer blurs on a thread pool; compositing
    order and the result are unchanged.
    """
    out, _ = _sweep(img, disparity, params, threads=threads)
    return out


def refocus_smooth_grad(
    img: np.ndarray,
    disparity: np.ndarray,
    params: RefocusParams,
    disparity_tangent: np.ndarray,
):
    """Refocused image plus its directional derivative in the disparity.

    Forward-mode: returns (output, d output / d disparity applied to
    ``disparity_tangent``). Requires smooth mode; the hard masks are
    piecewise constant in the disparity and carry no gradient.
    """
    if params.mode != "smooth":
        raise ValueError("gradients require mode='smooth'; hard masks have none")
    disparity_tangent = check_disparity(disparity_tangent, "disparity_tangent")
    check_same_size(disparity, disparity_tangent, "disparity", "disparity_tangent")
    return _sweep(img, disparity, params, tangent=disparity_tangent)


def focal_sweep(
    img: np.ndarray,
    disparity: np.ndarray,
    params: RefocusParams,
    n_planes: int,
    threads: int = 1,
):
    """Refocus at n_planes focal disparities spaced uniformly over the range.

    The range is [params.d_min, params.d_max] when pinned, otherwise the
    disparity extrema; the endpoints are always included.
    """
    if n_planes < 2:
        raise ValueError(f"n_planes must be >= 2, got {n_planes}")
    disparity = check_disparity(disparity, "disparity")
    lo = params.d_min if params.d_min is not None else float(disparity.min())
    hi = params.d_max if params.d_max is not None else float(disparity.max())
    frames = []
    for focal in np.linspace(lo, hi, int(n_planes)):
        frame_params = replace(params, focal_plane=float(focal))
        frames.append(refocus(img, disparity, frame_params, threads=threads))
    return frames


class Refocuser(BaseEstimator):
    """Estimator-style facade: fit a scene once, render many focal planes.

    fit() takes the image and either a precomputed disparity map or the
    right view of a rectified pair (the map is then estimated internally).
    transform() maps an iterable of focal-plane disparities to rendered
    frames; predict() is the single-frame convenience.
    """

    def __init__(
        self,
        aperture: float = 0.25,
        d_min: float = None,
        d_max: float = None,
        kernel_cap: int = None,
        alpha: float = 1e3,
        mode: str = "hard",
        threads: int = 1,
    ):
        self.aperture = aperture
        self.d_min = d_min
        self.d_max = d_max
        self.kernel_cap = kernel_cap
        self.alpha = alpha
        self.mode = mode
        self.threads = threads

    def _params(self, focal_plane: float) -> RefocusParams:
        return RefocusParams(
            focal_plane=float(focal_plane),
            aperture=self.aperture,
            d_min=self.d_min,
            d_max=self.d_max,
            kernel_cap=self.kernel_cap,
            alpha=self.alpha,
            mode=self.mode,
        )

    def fit(self, image: np.ndarray, disparity: np.ndarray = None, right: np.ndarray = None):
        image = check_unit_range(image, "image")
        if disparity is None:
            if right is None:
                raise ValueError("fit needs either a disparity map or a right view")
            disparity = estimate_disparity(image, right)
        disparity = check_disparity(disparity, "disparity")
        check_same_size(image, disparity, "image", "disparity")
        self.image_ = image
        self.disparity_ = disparity
        return self

    def _check_fitted(self):
        if not hasattr(self, "image_"):
            raise RuntimeError("Refocuser is not fitted; call fit() first")

    def predict(self, focal_plane: float) -> np.ndarray:
        self._check_fitted()
        return refocus(
            self.image_, self.disparity_, self._params(focal_plane), self.threads
        )

    def transform(self, focal_planes) -> list:
        self._check_fitted()
        return [self.predict(float(f)) for f in np.atleast_1d(focal_planes)]
