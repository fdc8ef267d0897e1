"""File format round-trips: PNG/PPM/PGM images and PFM disparity maps."""

import io

import numpy as np
import pytest

from stereobokeh.image_io import (
    colorize_disparity,
    load_disparity_pfm,
    load_image,
    load_image_bytes,
    pack_pfm_bytes,
    pack_png_bytes,
    save_disparity_pfm,
    save_image,
)


def _pfm_bytes(field: np.ndarray, little_endian: bool) -> bytes:
    """Hand-rolled single-channel PFM: bottom-up rows, scale sign = endianness."""
    h, w = field.shape
    scale = -1.0 if little_endian else 1.0
    header = f"Pf\n{w} {h}\n{scale}\n".encode("ascii")
    dtype = "<f4" if little_endian else ">f4"
    return header + field[::-1].astype(dtype).tobytes()


class TestImageRoundTrip:
    def test_png_rgb_quantization(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, (3, 15, 21))
        path = tmp_path / "t.png"
        save_image(img, path)
        back = load_image(path)
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= 1.0 / 255.0 + 1e-12

    def test_png_grayscale(self, tmp_path):
        img = np.linspace(0, 1, 64).reshape(8, 8)
        path = tmp_path / "g.png"
        save_image(img, path)
        back = load_image(path)
        assert back.ndim == 2
        assert np.abs(back - img).max() <= 1.0 / 255.0 + 1e-12

    def test_ppm_and_pgm(self, tmp_path):
        rng = np.random.default_rng(1)
        rgb = rng.uniform(0, 1, (3, 6, 5))
        gray = rng.uniform(0, 1, (6, 5))
        for img, name in ((rgb, "c.ppm"), (gray, "g.pgm")):
            path = tmp_path / name
            save_image(img, path)
            assert np.abs(load_image(path) - img).max() <= 1.0 / 255.0 + 1e-12

    def test_unsupported_save_suffix(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(np.zeros((4, 4)), tmp_path / "x.tiff")

    def test_png_bytes_round_trip(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 1, (3, 9, 7))
        back = load_image_bytes(pack_png_bytes(img))
        assert np.abs(back - img).max() <= 1.0 / 255.0 + 1e-12

    def test_undecodable_bytes_rejected(self):
        with pytest.raises(ValueError, match="decode"):
            load_image_bytes(b"not an image")


class TestPfm:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        field = rng.uniform(0, 60, (11, 17)).astype(np.float32).astype(np.float64)
        path = tmp_path / "d.pfm"
        save_disparity_pfm(field, path)
        assert np.array_equal(load_disparity_pfm(path), field)

    def test_constant_field(self, tmp_path):
        path = tmp_path / "c.pfm"
        save_disparity_pfm(np.full((4, 6), 5.0), path)
        assert np.array_equal(load_disparity_pfm(path), np.full((4, 6), 5.0))

    def test_both_endiannesses_load_identically(self, tmp_path):
        rng = np.random.default_rng(4)
        field = rng.uniform(0, 40, (5, 9)).astype(np.float32).astype(np.float64)
        le = tmp_path / "le.pfm"
        be = tmp_path / "be.pfm"
        le.write_bytes(_pfm_bytes(field, little_endian=True))
        be.write_bytes(_pfm_bytes(field, little_endian=False))
        a = load_disparity_pfm(le)
        b = load_disparity_pfm(be)
        assert np.array_equal(a, b)
        assert np.array_equal(a, field)

    def test_nan_samples_rejected(self, tmp_path):
        field = np.zeros((3, 3), dtype=np.float32)
        field[1, 1] = np.nan
        path = tmp_path / "bad.pfm"
        path.write_bytes(_pfm_bytes(field, little_endian=True))
        with pytest.raises(ValueError):
            load_disparity_pfm(path)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "junk.pfm"
        path.write_bytes(b"PF\n3 3\n-1.0\n" + b"\x00" * 108)
        with pytest.raises(ValueError):
            load_disparity_pfm(path)

    def test_pack_pfm_bytes_matches_file(self, tmp_path):
        rng = np.random.default_rng(5)
        field = rng.uniform(0, 20, (6, 4)).astype(np.float32).astype(np.float64)
        path = tmp_path / "d.pfm"
        save_disparity_pfm(field, path)
        assert pack_pfm_bytes(field) == path.read_bytes()


class TestColorize:
    def test_shape_and_range(self):
        disp = np.linspace(0, 30, 48).reshape(6, 8)
        img = colorize_disparity(disp)
        assert img.shape == (3, 6, 8)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_constant_field_does_not_divide_by_zero(self):
        img = colorize_disparity(np.full((4, 4), 7.0))
        assert np.isfinite(img).all()
