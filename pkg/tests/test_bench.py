"""Tests for the render timing harness."""

import numpy as np
import pytest

from stereobokeh.bench import BenchReport, bench, make_scene


class TestMakeScene:
    def test_shapes_and_ramp(self):
        img, disparity = make_scene(40, 24, d_max=8.0, seed=3)
        assert img.shape == (3, 24, 40)
        assert disparity.shape == (24, 40)
        assert img.min() >= 0.0 and img.max() <= 1.0
        assert disparity[:, 0].max() == 0.0
        assert np.allclose(disparity[:, -1], 8.0)
        np.testing.assert_allclose(disparity[0], disparity[-1])

    def test_seed_reproducible(self):
        a, _ = make_scene(16, 16, seed=7)
        b, _ = make_scene(16, 16, seed=7)
        np.testing.assert_array_equal(a, b)

    def test_rejects_degenerate_size(self):
        with pytest.raises(ValueError, match="at least 2x2"):
            make_scene(1, 16)


class TestBench:
    def test_rejects_too_few_runs(self):
        with pytest.raises(ValueError, match=">= 10"):
            bench(width=32, height=16, runs=3)

    def test_one_report_per_cell(self):
        reports = bench(
            width=48,
            height=24,
            apertures=(0.1, 0.5),
            kernel_caps=(7, None),
            runs=10,
            d_max=6.0,
        )
        assert len(reports) == 4
        assert [(r.aperture, r.kernel_cap) for r in reports] == [
            (0.1, 7),
            (0.1, None),
            (0.5, 7),
            (0.5, None),
        ]
        for r in reports:
            assert isinstance(r, BenchReport)
            assert r.runs == 10
            assert r.width == 48 and r.height == 24
            assert r.seconds_mean > 0.0
            assert r.frames_per_second > 0.0
            assert abs(r.frames_per_second * r.seconds_mean - 1.0) < 1e-9

    def test_report_to_dict_keys(self):
        (report,) = bench(
            width=32, height=16, apertures=(0.2,), kernel_caps=(5,), runs=10, d_max=4.0
        )
        d = report.to_dict()
        assert set(d) == {
            "aperture",
            "kernel_cap",
            "frames_per_second",
            "runs",
            "width",
            "height",
            "seconds_mean",
        }
        assert d["kernel_cap"] == 5
