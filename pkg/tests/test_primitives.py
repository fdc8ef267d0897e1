"""Kernel construction, convolution, and resampling reference checks."""

import numpy as np
import pytest

from stereobokeh.primitives import convolve, disk_kernel, luma, resize_bilinear

from scenes import naive_convolve


class TestDiskKernel:
    def test_zero_radius_is_identity(self):
        k = disk_kernel(0.0)
        assert k.shape == (1, 1)
        assert k[0, 0] == 1.0

    def test_radius_one_shape_and_ordering(self):
        k = disk_kernel(1.0)
        assert k.shape == (3, 3)
        # center covers a full cell, corners only the disk's rounded lobes
        assert k[1, 1] > k[0, 0] > 0.0

    def test_normalized_and_nonnegative_over_radius_grid(self):
        for r in np.arange(0.0, 20.5, 0.5):
            k = disk_kernel(float(r))
            assert k.min() >= 0.0
            assert abs(k.sum() - 1.0) < 1e-12
            assert k.shape[0] == 2 * int(np.ceil(r)) + 1

    def test_eightfold_symmetry(self):
        k = disk_kernel(3.7)
        assert np.array_equal(k, k[::-1])
        assert np.array_equal(k, k[:, ::-1])
        assert np.array_equal(k, k.T)

    def test_second_moment_matches_disk(self):
        """A disk of radius r has per-axis second moment r^2/4; the pixel
        coverage weighting must reproduce it. Cross-checked by Monte Carlo
        integration of the same disk."""
        r = 5.0
        k = disk_kernel(r)
        half = k.shape[0] // 2
        coords = np.arange(-half, half + 1, dtype=np.float64)
        m2_x = float((k * coords[None, :] ** 2).sum())
        m2_y = float((k * coords[:, None] ** 2).sum())
        analytic = r * r / 4.0
        assert abs(m2_x - analytic) / analytic < 0.05
        assert abs(m2_y - analytic) / analytic < 0.05
        rng = np.random.default_rng(0)
        pts = rng.uniform(-r, r, size=(200000, 2))
        inside = (pts**2).sum(axis=1) <= r * r
        mc = float((pts[inside, 0] ** 2).mean())
        assert abs(m2_x - mc) / analytic < 0.05

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            disk_kernel(-0.1)


class TestConvolve:
    def test_identity_kernel_bit_identical(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 1, (3, 9, 11))
        out = convolve(img, np.ones((1, 1)))
        assert np.array_equal(out, img)

    def test_partition_of_unity_interior(self):
        img = np.ones((16, 16))
        out = convolve(img, disk_kernel(2.0))
        assert np.allclose(out[2:-2, 2:-2], 1.0, atol=1e-12)

    def test_matches_double_loop_reference(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 1, (16, 16))
        taps = disk_kernel(2.0)
        assert np.abs(convolve(img, taps) - naive_convolve(img, taps)).max() < 1e-6

    def test_flips_kernel_like_a_convolution(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0, 1, (8, 8))
        taps = rng.uniform(0, 1, (3, 3))
        taps /= taps.sum()
        assert np.abs(convolve(img, taps) - naive_convolve(img, taps)).max() < 1e-12

    def test_linearity(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, (3, 12, 12))
        y = rng.uniform(0, 1, (3, 12, 12))
        taps = disk_kernel(1.5)
        lhs = convolve(0.3 * x + 0.6 * y, taps)
        rhs = 0.3 * convolve(x, taps) + 0.6 * convolve(y, taps)
        assert np.abs(lhs - rhs).max() < 1e-6

    def test_oversized_kernel_rejected(self):
        with pytest.raises(ValueError):
            convolve(np.zeros((4, 4)), np.ones((11, 11)) / 121.0)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            convolve(np.zeros((8, 8)), np.ones((2, 2)) / 4.0)


class TestResizeBilinear:
    def test_identity_when_size_unchanged(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0, 1, (4, 4))
        assert np.array_equal(resize_bilinear(img, 4, 4), img)

    def test_constant_preserved_at_any_size(self):
        img = np.full((5, 7), 0.37)
        for w, h in ((3, 2), (7, 5), (13, 11), (1, 1)):
            out = resize_bilinear(img, w, h)
            assert out.shape == (h, w)
            assert np.allclose(out, 0.37, atol=1e-12)

    def test_checkerboard_midpoint(self):
        board = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = resize_bilinear(board, 3, 3)
        assert abs(out[1, 1] - 0.5) < 1e-12

    def test_minmax_envelope(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(0.2, 0.8, (3, 10, 14))
        out = resize_bilinear(img, 31, 23)
        assert out.min() >= img.min() - 1e-12
        assert out.max() <= img.max() + 1e-12

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            resize_bilinear(np.zeros((4, 4)), 0, 4)


class TestLuma:
    def test_weights_sum_to_one(self):
        img = np.full((3, 4, 4), 0.5)
        assert np.allclose(luma(img), 0.5, atol=1e-12)

    def test_single_channel_passthrough(self):
        g = np.random.default_rng(7).uniform(0, 1, (6, 6))
        assert np.array_equal(luma(g), g)
