"""Timing harness for the refocus hot path.

Builds a seeded synthetic scene (noise texture over a horizontal disparity
ramp), renders it repeatedly for every (aperture, kernel cap) cell, and
reports mean per-frame timing. Scene construction, disparity, and
validation happen outside the timed region: the render step is the
parameter-dependent part worth measuring.
"""

import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .refocus import RefocusParams, refocus


@dataclass
class BenchReport:
    aperture: float
    kernel_cap: Optional[int]
    frames_per_second: float
    runs: int
    width: int
    height: int
    seconds_mean: float

    def to_dict(self) -> dict:
        return asdict(self)


def make_scene(width: int, height: int, d_max: float = 16.0, seed: int = 0):
    """Noise image plus a left-to-right disparity ramp from 0 to d_max."""
    if width < 2 or height < 2:
        raise ValueError("scene must be at least 2x2")
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, size=(3, height, width))
    ramp = np.linspace(0.0, float(d_max), width)
    return img, np.broadcast_to(ramp, (height, width)).copy()


def bench(
    width: int = 1242,
    height: int = 375,
    apertures=(0.1, 0.8),
    kernel_caps=(11, None),
    runs: int = 10,
    d_max: float = 16.0,
    focal_plane: float = None,
    threads: int = 1,
    seed: int = 0,
):
    """Mean render time over >= 10 runs for each (aperture, cap) cell.

    Returns one BenchReport per cell, apertures outer, caps inner. The same
    precomputed scene is reused for every cell so cells are comparable.
    """
    if runs < 10:
        raise ValueError(f"runs must be >= 10 for a stable mean, got {runs}")
    img, disparity = make_scene(width, height, d_max=d_max, seed=seed)
    if focal_plane is None:
        focal_plane = d_max / 2.0
    reports = []
    for aperture in apertures:
        for cap in kernel_caps:
            params = RefocusParams(
                focal_plane=focal_plane, aperture=aperture, kernel_cap=cap
            )
            times = []
            for _ in range(runs):
                start = time.perf_counter()
                refocus(img, disparity, params, threads=threads)
                times.append(time.perf_counter() - start)
            mean = float(np.mean(times))
            reports.append(
                BenchReport(
                    aperture=float(aperture),
                    kernel_cap=cap,
                    frames_per_second=1.0 / mean if mean > 0 else float("inf"),
                    runs=runs,
                    width=width,
                    height=height,
                    seconds_mean=mean,
                )
            )
    return reports
