"""Raster primitives: disk kernels, convolution, and bilinear resampling.

These are the building blocks of the layer renderer. Kernels are plain 2D
weight arrays with odd side length, normalized to sum 1.
"""

import math

import numpy as np
from scipy import ndimage

from .validation import as_planar

# Subsample grid used to anti-alias cells crossed by the disk boundary.
_AA_SUBSAMPLES = 64


def _cell_coverage(ax: float, ay: float, radius: float) -> float:
    """Fraction of the unit cell centered at (ax, ay) covered by the disk."""
    near = math.hypot(max(ax - 0.5, 0.0), max(ay - 0.5, 0.0))
    far = math.hypot(ax + 0.5, ay + 0.5)
    if far <= radius:
        return 1.0
    if near >= radius:
        return 0.0
    off = (np.arange(_AA_SUBSAMPLES) + 0.5) / _AA_SUBSAMPLES - 0.5
    sx = ax + off[np.newaxis, :]
    sy = ay + off[:, np.newaxis]
    return float(np.mean(sx * sx + sy * sy <= radius * radius))


def disk_kernel(radius: float) -> np.ndarray:
    """Anti-aliased circular averaging kernel of the given radius.

    Side length is 2*ceil(radius)+1. Each tap weight is proportional to the
    area of its unit pixel cell covered by the disk, so small radii stay
    circular instead of degenerating to squares. Weights sum to 1, and the
    kernel is exactly symmetric under axis flips and transposition.
    radius = 0 yields the 1x1 identity kernel.
    """
    if radius < 0:
        raise ValueError(f"kernel radius must be >= 0, got {radius}")
    half = math.ceil(radius)
    if half == 0:
        return np.ones((1, 1))
    side = 2 * half + 1
    taps = np.empty((side, side))
    # Coverage depends only on the sorted absolute offsets, which forces
    # bit-exact 8-fold symmetry.
    cache = {}
    for y in range(half + 1):
        for x in range(y, half + 1):
            cache[(y, x)] = _cell_coverage(float(y), float(x), radius)
    for y in range(-half, half + 1):
        for x in range(-half, half + 1):
            a, b = sorted((abs(x), abs(y)))
            taps[y + half, x + half] = cache[(a, b)]
    total = taps.sum()
    if total <= 0.0:
        # Disk smaller than any subsample hit: collapse to the identity.
        taps[:] = 0.0
        taps[half, half] = 1.0
        return taps
    return taps / total


def convolve(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Direct 2D convolution with zero padding outside the frame.

    Works per channel on planar images; any leading channel count is
    accepted since the kernel never mixes channels. Zero padding attenuates
    boundary energy; the layer compositor's mask normalization divides that
    loss back out, so no other padding mode is correct here.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"image: expected 2 or 3 dimensions, got {img.ndim}")
    if not np.isfinite(img).all():
        raise ValueError("image: values must be finite")
    taps = np.asarray(taps, dtype=np.float64)
    if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
        raise ValueError(f"kernel must be square with odd side, got {taps.shape}")
    h, w = img.shape[-2], img.shape[-1]
    if taps.shape[0] > 2 * min(h, w) + 1:
        raise ValueError(
            f"kernel side {taps.shape[0]} exceeds 2*min(width,height)+1 for {w}x{h}"
        )
    if taps.shape == (1, 1):
        out = img * taps[0, 0]
        return out
    planar, had_channels = as_planar(img)
    out = np.empty_like(planar)
    for c in range(planar.shape[0]):
        ndimage.convolve(planar[c], taps, output=out[c], mode="constant", cval=0.0)
    return out if had_channels else out[0]


def _resize_axis(arr: np.ndarray, new_n: int, axis: int) -> np.ndarray:
    """Bilinear resample along one axis with half-pixel centers, edge clamped."""
    old_n = arr.shape[axis]
    if new_n == old_n:
        return arr
    coords = (np.arange(new_n) + 0.5) * (old_n / new_n) - 0.5
    coords = np.clip(coords, 0.0, old_n - 1.0)
    i0 = np.floor(coords).astype(np.intp)
    i1 = np.minimum(i0 + 1, old_n - 1)
    frac = coords - i0
    shape = [1] * arr.ndim
    shape[axis] = new_n
    frac = frac.reshape(shape)
    lo = np.take(arr, i0, axis=axis)
    hi = np.take(arr, i1, axis=axis)
    return lo * (1.0 - frac) + hi * frac


def resize_bilinear(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Separable bilinear resize to (new_w, new_h).

    Uses half-pixel sample centers with edge clamping. Resizing to the
    current dimensions returns a bit-identical copy.
    """
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {new_w}x{new_h}")
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape[-2], arr.shape[-1]
    if (new_h, new_w) == (h, w):
        return arr.copy()
    out = _resize_axis(arr, new_w, arr.ndim - 1)
    out = _resize_axis(out, new_h, arr.ndim - 2)
    return np.ascontiguousarray(out)


def luma(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of a planar RGB image; identity for single-channel."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.shape[0] == 1:
        return arr[0]
    return 0.299 * arr[0] + 0.587 * arr[1] + 0.114 * arr[2]
