"""Correlation tracking that keeps the focal plane on a moving subject.

A frequency-domain correlation filter follows a user-picked box from frame
to frame; the focal plane for each frame is the median disparity inside the
box, optionally smoothed over time. When the peak-to-sidelobe ratio of the
response collapses the target is declared lost and the box and focal plane
freeze until the response recovers.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .primitives import luma
from .refocus import RefocusParams, refocus
from .validation import check_disparity, check_image, check_same_size

_PSR_EXCLUSION = 11


def _as_gray(frame: np.ndarray) -> np.ndarray:
    frame = check_image(frame, "frame")
    return luma(frame) if frame.ndim == 3 else frame


def _hann2d(h: int, w: int) -> np.ndarray:
    return np.outer(np.hanning(h), np.hanning(w))


def _gaussian_response(h: int, w: int) -> np.ndarray:
    sigma = w / 10.0
    y = np.arange(h, dtype=np.float64) - h // 2
    x = np.arange(w, dtype=np.float64) - w // 2
    yy, xx = np.meshgrid(y, x, indexing="ij")
    return np.exp(-(yy * yy + xx * xx) / (2.0 * sigma * sigma))


def _cut_patch(gray: np.ndarray, cx: float, cy: float, w: int, h: int) -> np.ndarray:
    """Axis-aligned crop centered at (cx, cy), edge-replicated off-frame."""
    x0 = int(round(cx - w / 2.0))
    y0 = int(round(cy - h / 2.0))
    fh, fw = gray.shape
    pad_l = max(0, -x0)
    pad_t = max(0, -y0)
    pad_r = max(0, x0 + w - fw)
    pad_b = max(0, y0 + h - fh)
    if pad_l or pad_t or pad_r or pad_b:
        gray = np.pad(gray, ((pad_t, pad_b), (pad_l, pad_r)), mode="edge")
        x0 += pad_l
        y0 += pad_t
    return gray[y0 : y0 + h, x0 : x0 + w]


def _quadratic_offset(left: float, center: float, right: float) -> float:
    den = left + right - 2.0 * center
    if abs(den) < 1e-12:
        return 0.0
    return float(np.clip((left - right) / (2.0 * den), -0.5, 0.5))


class CorrelationTracker(BaseEstimator):
    """Single-target correlation filter with online appearance updates.

    fit(frame, box) trains the filter on the initial appearance; update(frame)
    relocates the box and refreshes the filter with an exponential moving
    average. Attributes after each call: box_ (x, y, w, h), psr_ (response
    peak-to-sidelobe ratio), lost_ (True while the response is unreliable).
    """

    def __init__(
        self,
        learning_rate: float = 0.125,
        reg: float = 1e-4,
        psr_threshold: float = 3.0,
    ):
        self.learning_rate = learning_rate
        self.reg = reg
        self.psr_threshold = psr_threshold

    def _preprocess(self, patch: np.ndarray) -> np.ndarray:
        q = np.log1p(patch * 255.0)
        q = (q - q.mean()) / (q.std() + 1e-5)
        return q * self._window

    def fit(self, frame: np.ndarray, box):
        x, y, w, h = (float(v) for v in box)
        w, h = int(round(w)), int(round(h))
        if w < 8 or h < 8:
            raise ValueError(f"tracking box must be at least 8x8, got {w}x{h}")
        gray = _as_gray(frame)
        if x < 0 or y < 0 or x + w > gray.shape[1] or y + h > gray.shape[0]:
            raise ValueError("tracking box must lie fully inside the frame")
        self._w, self._h = w, h
        self._cx = x + w / 2.0
        self._cy = y + h / 2.0
        self._window = _hann2d(h, w)
        self._target_fft = np.fft.fft2(_gaussian_response(h, w))
        patch_fft = np.fft.fft2(self._preprocess(_cut_patch(gray, self._cx, self._cy, w, h)))
        self._num = np.conj(patch_fft) * self._target_fft
        self._den = np.conj(patch_fft) * patch_fft
        self.psr_ = float("inf")
        self.lost_ = False
        return self

    def _check_fitted(self):
        if not hasattr(self, "_num"):
            raise RuntimeError("tracker is not fitted; call fit() first")

    @property
    def box_(self):
        self._check_fitted()
        return (
            self._cx - self._w / 2.0,
            self._cy - self._h / 2.0,
            float(self._w),
            float(self._h),
        )

    def _psr(self, response: np.ndarray, py: int, px: int) -> float:
        h, w = response.shape
        half = _PSR_EXCLUSION // 2
        mask = np.ones_like(response, dtype=bool)
        yy = (np.arange(py - half, py + half + 1)) % h
        xx = (np.arange(px - half, px + half + 1)) % w
        mask[np.ix_(yy, xx)] = False
        side = response[mask]
        return float((response[py, px] - side.mean()) / (side.std() + 1e-9))

    def update(self, frame: np.ndarray):
        """Relocate the box on a new frame; returns the updated box."""
        self._check_fitted()
        gray = _as_gray(frame)
        h, w = self._h, self._w
        patch = self._preprocess(_cut_patch(gray, self._cx, self._cy, w, h))
        patch_fft = np.fft.fft2(patch)
        filt = self._num / (self._den + self.reg)
        response = np.real(np.fft.ifft2(filt * patch_fft))
        py, px = np.unravel_index(np.argmax(response), response.shape)
        self.psr_ = self._psr(response, int(py), int(px))
        if self.psr_ < self.psr_threshold:
            self.lost_ = True
            return self.box_
        self.lost_ = False
        sub_y = _quadratic_offset(
            response[(py - 1) % h, px], response[py, px], response[(py + 1) % h, px]
        )
        sub_x = _quadratic_offset(
            response[py, (px - 1) % w], response[py, px], response[py, (px + 1) % w]
        )
        self._cy += py + sub_y - h // 2
        self._cx += px + sub_x - w // 2
        # box never leaves the frame; a target that does drops PSR instead
        self._cx = float(np.clip(self._cx, w / 2.0, gray.shape[1] - w / 2.0))
        self._cy = float(np.clip(self._cy, h / 2.0, gray.shape[0] - h / 2.0))
        lr = self.learning_rate
        new_patch_fft = np.fft.fft2(
            self._preprocess(_cut_patch(gray, self._cx, self._cy, w, h))
        )
        self._num = (1 - lr) * self._num + lr * np.conj(new_patch_fft) * self._target_fft
        self._den = (1 - lr) * self._den + lr * np.conj(new_patch_fft) * new_patch_fft
        return self.box_


def focus_from_box(disparity: np.ndarray, box) -> float:
    """Median disparity inside the box, clipped to the frame."""
    disparity = check_disparity(disparity, "disparity")
    x, y, w, h = (float(v) for v in box)
    fh, fw = disparity.shape
    x0 = max(int(round(x)), 0)
    y0 = max(int(round(y)), 0)
    x1 = min(int(round(x + w)), fw)
    y1 = min(int(round(y + h)), fh)
    if x1 <= x0 or y1 <= y0:
        raise ValueError("box does not overlap the frame")
    return float(np.median(disparity[y0:y1, x0:x1]))


class FocusSchedule:
    """Exponential smoothing of the focal plane across frames.

    value = beta * previous + (1 - beta) * measurement; beta = 0 follows the
    measurement exactly. A None measurement (target lost) holds the previous
    value.
    """

    def __init__(self, beta: float = 0.6):
        if not 0.0 <= beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {beta}")
        self.beta = beta
        self.value_ = None

    def update(self, measurement) -> float:
        if measurement is None:
            if self.value_ is None:
                raise ValueError("first measurement must not be None")
            return self.value_
        if self.value_ is None:
            self.value_ = float(measurement)
        else:
            self.value_ = self.beta * self.value_ + (1.0 - self.beta) * float(measurement)
        return self.value_


@dataclass
class TrackedFrame:
    index: int
    image: np.ndarray
    box: tuple
    focal_plane: float
    psr: float
    lost: bool


def track_and_refocus(
    frames,
    disparities,
    box,
    aperture: float,
    beta: float = 0.6,
    kernel_cap: int = None,
    mode: str = "hard",
    tracker: CorrelationTracker = None,
    threads: int = 1,
):
    """Follow a box through a sequence and keep it in focus.

    frames and disparities are parallel iterables (frames in unit range).
    Yields a TrackedFrame per input frame with the refocused image, the
    tracked box, and the focal plane actually used.
    """
    tracker = tracker or CorrelationTracker()
    schedule = FocusSchedule(beta=beta)
    for index, (frame, disparity) in enumerate(zip(frames, disparities)):
        frame = check_image(frame, "frame")
        disparity = check_disparity(disparity, "disparity")
        check_same_size(frame, disparity, "frame", "disparity")
        if index == 0:
            tracker.fit(frame, box)
        else:
            tracker.update(frame)
        measurement = None if tracker.lost_ else focus_from_box(disparity, tracker.box_)
        focal = schedule.update(measurement)
        params = RefocusParams(
            focal_plane=focal, aperture=aperture, kernel_cap=kernel_cap, mode=mode
        )
        yield TrackedFrame(
            index=index,
            image=refocus(frame, disparity, params, threads=threads),
            box=tracker.box_,
            focal_plane=focal,
            psr=tracker.psr_,
            lost=tracker.lost_,
        )
