"""File I/O: 8-bit PNG/PPM/PGM images and Middlebury-convention PFM disparity.

Images load as normalized float64 in [0, 1]: (H, W) for grayscale, planar
(3, H, W) for color. PFM files are single-channel "Pf", bottom-up row order,
with the scale sign encoding endianness (negative = little-endian).
"""

import io

import numpy as np
from PIL import Image as PILImage

from .validation import check_disparity, check_image

_SUPPORTED_SAVE = {".png", ".ppm", ".pgm"}


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG or binary PPM/PGM as normalized intensities.

    Palette and alpha images are converted to RGB; 16-bit and float inputs
    are rejected.
    """
    try:
        with PILImage.open(path) as pil:
            pil.load()
            mode = pil.mode
            if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise ValueError(f"{path}: unsupported bit depth (mode {mode})")
            if mode == "L":
                arr = np.asarray(pil, dtype=np.float64)
            elif mode in ("P", "RGBA", "LA", "RGB", "CMYK"):
                arr = np.asarray(pil.convert("RGB"), dtype=np.float64)
            else:
                raise ValueError(f"{path}: unsupported image mode {mode}")
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"{path}: unreadable image ({exc})") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: zero-sized image")
    arr /= 255.0
    if arr.ndim == 3:
        arr = np.ascontiguousarray(np.moveaxis(arr, -1, 0))
    return arr


def save_image(img: np.ndarray, path) -> None:
    """Write an image as 8-bit PNG, PPM, or PGM depending on the extension."""
    img = check_image(img)
    suffix = str(path)[str(path).rfind(".") :].lower()
    if suffix not in _SUPPORTED_SAVE:
        raise ValueError(f"unsupported output format {suffix!r} (png/ppm/pgm)")
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    if quantized.ndim == 3:
        if quantized.shape[0] == 1:
            pil = PILImage.fromarray(quantized[0], mode="L")
        else:
            pil = PILImage.fromarray(np.moveaxis(quantized, 0, -1), mode="RGB")
    else:
        pil = PILImage.fromarray(quantized, mode="L")
    if suffix == ".pgm" and pil.mode != "L":
        raise ValueError("PGM output requires a single-channel image")
    pil.save(path)


def _read_pfm_token(f) -> bytes:
    token = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            raise ValueError("malformed PFM header: unexpected end of file")
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def load_disparity_pfm(path, clamp=None) -> np.ndarray:
    """Read a single-channel PFM disparity map.

    Honors the scale-sign endianness convention and bottom-up row order.
    NaN or infinite samples are rejected. ``clamp=(lo, hi)`` optionally
    clips the loaded disparities into a range.
    """
    with open(path, "rb") as f:
        magic = _read_pfm_token(f)
        if magic == b"PF":
            raise ValueError(f"{path}: color PFM not supported, expected 'Pf'")
        if magic != b"Pf":
            raise ValueError(f"{path}: malformed PFM header (magic {magic!r})")
        try:
            width = int(_read_pfm_token(f))
            height = int(_read_pfm_token(f))
            scale = float(_read_pfm_token(f))
        except ValueError as exc:
            raise ValueError(f"{path}: malformed PFM header ({exc})") from exc
        if width <= 0 or height <= 0:
            raise ValueError(f"{path}: invalid PFM dimensions {width}x{height}")
        dtype = "<f4" if scale < 0 else ">f4"
        raw = f.read(width * height * 4)
    if len(raw) != width * height * 4:
        raise ValueError(f"{path}: truncated PFM payload")
    data = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    data = np.ascontiguousarray(data[::-1]).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: PFM contains NaN or infinite samples")
    if clamp is not None:
        data = np.clip(data, clamp[0], clamp[1])
    return data


def save_disparity_pfm(disp: np.ndarray, path) -> None:
    """Write a disparity map as little-endian single-channel PFM."""
    disp = check_disparity(disp)
    height, width = disp.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(disp[::-1], dtype="<f4").tobytes())


def colorize_disparity(disp: np.ndarray, d_min=None, d_max=None) -> np.ndarray:
    """Map disparities to a planar RGB preview (near = warm, far = cool)."""
    disp = check_disparity(disp)
    lo = float(disp.min()) if d_min is None else float(d_min)
    hi = float(disp.max()) if d_max is None else float(d_max)
    span = hi - lo if hi > lo else 1.0
    t = np.clip((disp - lo) / span, 0.0, 1.0)
    # Blue (far) -> cyan -> green -> yellow -> red (near).
    r = np.clip(1.5 - np.abs(4.0 * t - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * t - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * t - 1.0), 0.0, 1.0)
    return np.stack([r, g, b])


def pack_pfm_bytes(disp: np.ndarray) -> bytes:
    """PFM file content for a disparity map, as bytes (for HTTP responses)."""
    disp = check_disparity(disp)
    height, width = disp.shape
    header = f"Pf\n{width} {height}\n-1.0\n".encode("ascii")
    return header + np.ascontiguousarray(disp[::-1], dtype="<f4").tobytes()


def load_image_bytes(data: bytes) -> np.ndarray:
    """Decode an in-memory image file (same formats as load_image)."""
    try:
        return load_image(io.BytesIO(data))
    except ValueError as exc:
        raise ValueError(f"could not decode uploaded image: {exc}") from exc


def pack_png_bytes(img: np.ndarray) -> bytes:
    """8-bit PNG file content for an image, as bytes (for HTTP responses)."""
    img = check_image(img)
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    if quantized.ndim == 3:
        if quantized.shape[0] == 1:
            pil = PILImage.fromarray(quantized[0], mode="L")
        else:
            pil = PILImage.fromarray(np.moveaxis(quantized, 0, -1), mode="RGB")
    else:
        pil = PILImage.fromarray(quantized, mode="L")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()
