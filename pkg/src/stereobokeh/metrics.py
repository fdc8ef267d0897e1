"""Image quality metrics: PSNR, SSIM, and a no-reference naturalness score.

The no-reference score follows the NIQE recipe: locally normalized luminance
coefficients are summarized by generalized-Gaussian fits per patch, and an
image is scored by the Mahalanobis-style distance between its patch feature
statistics and those of a corpus of clean photographs.
"""

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np
from scipy.ndimage import correlate
from scipy.special import gamma as gamma_fn
from sklearn.base import BaseEstimator

from .primitives import luma, resize_bilinear
from .validation import check_image, check_same_size, check_unit_range

PSNR_CAP = 99.0

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


def _as_gray(img: np.ndarray) -> np.ndarray:
    img = check_image(img, "image")
    if img.ndim == 3:
        return luma(img)
    return img


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit-range images, capped at 99."""
    reference = check_unit_range(reference, "reference")
    test = check_unit_range(test, "test")
    check_same_size(reference, test, "reference", "test")
    mse = float(np.mean((reference - test) ** 2))
    if mse <= 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(reference: np.ndarray, test: np.ndarray) -> float:
    """Mean structural similarity over an 11x11 Gaussian window, sigma 1.5.

    Color inputs are reduced to luma first. Only window positions fully
    inside the image contribute, so both dimensions must be at least 11.
    """
    reference = check_unit_range(reference, "reference")
    test = check_unit_range(test, "test")
    check_same_size(reference, test, "reference", "test")
    x = _as_gray(reference)
    y = _as_gray(test)
    size, sigma = 11, 1.5
    h, w = x.shape
    if h < size or w < size:
        raise ValueError(f"images must be at least {size}x{size} for ssim")
    win = _gaussian_window(size, sigma)
    half = size // 2
    valid = (slice(half, h - half), slice(half, w - half))

    def filt(arr):
        return correlate(arr, win, mode="constant")[valid]

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov_xy = filt(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + _SSIM_C1) * (2.0 * cov_xy + _SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
    return float(np.mean(num / den))


_ALPHA_GRID = np.linspace(0.2, 10.0, 2048)
_RHO_GRID = gamma_fn(2.0 / _ALPHA_GRID) ** 2 / (
    gamma_fn(1.0 / _ALPHA_GRID) * gamma_fn(3.0 / _ALPHA_GRID)
)


def _lookup_alpha(rho: float) -> float:
    return float(_ALPHA_GRID[np.argmin(np.abs(_RHO_GRID - rho))])


def mscn_coefficients(gray255: np.ndarray):
    """Locally normalized luminance and the local deviation field.

    Uses a 7x7 Gaussian (sigma 7/6) for the local mean and deviation. The
    stabilizing constant tracks the global mean intensity (1 at mid-gray on
    the 0..255 scale), which makes the coefficients exactly invariant to
    global gain.
    """
    win = _gaussian_window(7, 7.0 / 6.0)
    mu = correlate(gray255, win, mode="nearest")
    var = correlate(gray255 * gray255, win, mode="nearest") - mu * mu
    sigma = np.sqrt(np.maximum(var, 0.0))
    c = max(float(gray255.mean()), 1.0) / 128.0
    return (gray255 - mu) / (sigma + c), sigma


def fit_ggd(x: np.ndarray):
    """Moment-matched generalized Gaussian fit: (shape, variance)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    mean_sq = float(np.mean(x * x))
    mean_abs = float(np.mean(np.abs(x)))
    rho = mean_abs * mean_abs / (mean_sq + 1e-12)
    return _lookup_alpha(rho), mean_sq


def fit_aggd(x: np.ndarray):
    """Asymmetric generalized Gaussian fit: (shape, mean, left var, right var)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    neg = x[x < 0]
    pos = x[x > 0]
    sigma_l = math.sqrt(float(np.mean(neg * neg))) if neg.size else 0.0
    sigma_r = math.sqrt(float(np.mean(pos * pos))) if pos.size else 0.0
    ratio = sigma_l / (sigma_r + 1e-12)
    mean_abs = float(np.mean(np.abs(x)))
    mean_sq = float(np.mean(x * x))
    rho = mean_abs * mean_abs / (mean_sq + 1e-12)
    rho_hat = (
        rho * (ratio**3 + 1.0) * (ratio + 1.0) / ((ratio * ratio + 1.0) ** 2 + 1e-12)
    )
    alpha = _lookup_alpha(rho_hat)
    g1, g2 = gamma_fn(1.0 / alpha), gamma_fn(2.0 / alpha)
    g3 = gamma_fn(3.0 / alpha)
    eta = (sigma_r - sigma_l) * (g2 / g1) * math.sqrt(g1 / g3)
    return alpha, eta, sigma_l * sigma_l, sigma_r * sigma_r


_PAIR_SHIFTS = ((0, 1), (1, 0), (1, 1), (1, -1))


def _mscn_features(mscn: np.ndarray) -> list:
    """18 features: GGD of the field plus AGGD of 4 neighbor products."""
    feats = list(fit_ggd(mscn))
    for dy, dx in _PAIR_SHIFTS:
        shifted = np.roll(mscn, (-dy, -dx), axis=(0, 1))
        if dy:
            shifted = shifted[:-dy]
            base = mscn[:-dy]
        else:
            base = mscn
        if dx > 0:
            shifted = shifted[:, :-dx]
            base = base[:, :-dx]
        elif dx < 0:
            shifted = shifted[:, -dx:]
            base = base[:, -dx:]
        feats.extend(fit_aggd(base * shifted))
    return feats


def _image_patch_features(gray_unit: np.ndarray, patch_size: int):
    """Per-patch 36-d features and per-patch sharpness for one image.

    Features concatenate two scales (full and half resolution); sharpness is
    the mean local deviation at full resolution, used for patch selection.
    """
    if patch_size < 16 or patch_size % 2:
        raise ValueError(f"patch_size must be even and >= 16, got {patch_size}")
    g = gray_unit * 255.0
    h, w = g.shape
    ny, nx = h // patch_size, w // patch_size
    if ny < 1 or nx < 1:
        raise ValueError(
            f"image {w}x{h} is smaller than one {patch_size}px patch"
        )
    mscn1, sigma1 = mscn_coefficients(g)
    half = resize_bilinear(g, max(w // 2, 8), max(h // 2, 8))
    mscn2, _ = mscn_coefficients(half)
    p2 = patch_size // 2
    feats, sharps = [], []
    for j in range(ny):
        for i in range(nx):
            y0, x0 = j * patch_size, i * patch_size
            block1 = mscn1[y0 : y0 + patch_size, x0 : x0 + patch_size]
            block2 = mscn2[j * p2 : j * p2 + p2, i * p2 : i * p2 + p2]
            feats.append(_mscn_features(block1) + _mscn_features(block2))
            sharps.append(float(np.mean(sigma1[y0 : y0 + patch_size, x0 : x0 + patch_size])))
    return np.asarray(feats), np.asarray(sharps)


class NiqeModel(BaseEstimator):
    """No-reference quality scorer fitted on clean photographs.

    fit() learns the mean and covariance of patch features over the sharpest
    patches of the corpus; score() measures how far a test image's patch
    statistics sit from that model (lower is more natural).
    """

    def __init__(self, patch_size: int = 96, sharpness_threshold: float = 0.75):
        self.patch_size = patch_size
        self.sharpness_threshold = sharpness_threshold

    def _selected_features(self, img: np.ndarray) -> np.ndarray:
        """Per-patch features of the sharpest patches (all, if too few pass)."""
        gray = _as_gray(check_unit_range(img, "image"))
        feats, sharps = _image_patch_features(gray, self.patch_size)
        keep = sharps > self.sharpness_threshold * sharps.max()
        return feats[keep] if keep.sum() >= 2 else feats

    def fit(self, images, y=None):
        rows = [self._selected_features(img) for img in images]
        all_feats = np.concatenate(rows, axis=0)
        if all_feats.shape[0] < 2:
            raise ValueError("need at least 2 selected patches to fit the model")
        self.mean_ = all_feats.mean(axis=0)
        self.cov_ = np.cov(all_feats, rowvar=False)
        return self

    def score(self, img: np.ndarray) -> float:
        if not hasattr(self, "mean_"):
            raise RuntimeError("model is not fitted; call fit() or from_json()")
        feats = self._selected_features(img)
        if feats.shape[0] < 2:
            raise ValueError(
                f"image must contain at least 2 patches of {self.patch_size}px"
            )
        nu = feats.mean(axis=0)
        cov_test = np.cov(feats, rowvar=False)
        pooled = (self.cov_ + cov_test) / 2.0
        delta = nu - self.mean_
        quad = float(delta @ np.linalg.pinv(pooled) @ delta)
        return math.sqrt(max(quad, 0.0))

    def to_json(self) -> str:
        if not hasattr(self, "mean_"):
            raise RuntimeError("model is not fitted; nothing to serialize")
        return json.dumps(
            {
                "patch_size": self.patch_size,
                "sharpness_threshold": self.sharpness_threshold,
                "mean": self.mean_.tolist(),
                "cov": self.cov_.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "NiqeModel":
        blob = json.loads(text)
        model = cls(
            patch_size=int(blob["patch_size"]),
            sharpness_threshold=float(blob["sharpness_threshold"]),
        )
        model.mean_ = np.asarray(blob["mean"], dtype=np.float64)
        model.cov_ = np.asarray(blob["cov"], dtype=np.float64)
        if model.mean_.shape != (36,) or model.cov_.shape != (36, 36):
            raise ValueError("model file must hold a 36-d mean and 36x36 covariance")
        if not np.allclose(model.cov_, model.cov_.T, atol=1e-9):
            raise ValueError("model covariance is not symmetric")
        if np.linalg.eigvalsh(model.cov_).min() < -1e-9:
            raise ValueError("model covariance is not positive semi-definite")
        return model


_DEFAULT_MODEL = None


def load_default_model() -> NiqeModel:
    """Packaged model fitted on a small corpus of clean photographs."""
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        text = (
            resources.files("stereobokeh").joinpath("data/niqe_model.json").read_text()
        )
        _DEFAULT_MODEL = NiqeModel.from_json(text)
    return _DEFAULT_MODEL


def niqe(img: np.ndarray, model: NiqeModel = None) -> float:
    """Naturalness score of one image; lower is better."""
    return (model or load_default_model()).score(img)


@dataclass
class MetricReport:
    niqe: float
    niqe_rel: float
    ssim: float
    psnr: float

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_refocus(
    test: np.ndarray, reference: np.ndarray, model: NiqeModel = None
) -> MetricReport:
    """Full- and no-reference quality of a rendered image versus a reference.

    niqe scores the test image alone; niqe_rel is the absolute difference
    between the test and reference scores under the same model.
    """
    niqe_test = niqe(test, model)
    niqe_ref = niqe(reference, model)
    return MetricReport(
        niqe=niqe_test,
        niqe_rel=abs(niqe_test - niqe_ref),
        ssim=ssim(test, reference),
        psnr=psnr(test, reference),
    )
