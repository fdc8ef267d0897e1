"""Input validation helpers shared across the package.

Images are numpy arrays of normalized intensities in [0, 1]: ``(H, W)`` for
single-channel data, ``(C, H, W)`` planar for multi-channel (C is 1 or 3).
Disparity maps are ``(H, W)`` float arrays in pixel units.
"""

import numpy as np


def check_image(img, name: str = "image") -> np.ndarray:
    """Validate an image array and return it as float64.

    Accepts (H, W) or planar (C, H, W) with 1 or 3 channels. Rejects
    non-finite samples and empty arrays.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        pass
    elif arr.ndim == 3:
        if arr.shape[0] not in (1, 3):
            raise ValueError(
                f"{name}: expected 1 or 3 channels (planar), got {arr.shape[0]}"
            )
    else:
        raise ValueError(f"{name}: expected 2D or planar 3D array, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite samples")
    return arr


def check_unit_range(img, name: str = "image") -> np.ndarray:
    """Validate an image and require intensities in [0, 1]."""
    arr = check_image(img, name)
    lo, hi = float(arr.min()), float(arr.max())
    if lo < -1e-9 or hi > 1 + 1e-9:
        raise ValueError(f"{name}: intensities outside [0, 1] (min={lo}, max={hi})")
    return arr


def check_disparity(disp, name: str = "disparity") -> np.ndarray:
    """Validate a single-channel disparity map and return it as float64."""
    arr = np.asarray(disp, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected 2D array, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite samples")
    return arr


def spatial_shape(img) -> tuple:
    """(height, width) of a 2D or planar 3D array."""
    arr = np.asarray(img)
    return arr.shape[-2], arr.shape[-1]


def check_same_size(a, b, name_a: str = "a", name_b: str = "b") -> None:
    """Require two arrays to share spatial dimensions."""
    if spatial_shape(a) != spatial_shape(b):
        raise ValueError(
            f"{name_a} {spatial_shape(a)} and {name_b} {spatial_shape(b)} "
            "have mismatched dimensions"
        )


def as_planar(img) -> tuple:
    """Return (planar (C, H, W) view, had_channel_axis flag)."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return arr[np.newaxis], False
    return arr, True
