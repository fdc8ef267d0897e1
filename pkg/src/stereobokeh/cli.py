"""Command-line interface for depth estimation, refocusing, and tooling."""

import itertools
import json
import logging
from glob import glob
from pathlib import Path

import click
import numpy as np

from .bench import bench as run_bench
from .image_io import (
    colorize_disparity,
    load_disparity_pfm,
    load_image,
    save_disparity_pfm,
    save_image,
)
from .metrics import NiqeModel, evaluate_refocus
from .refocus import RefocusParams, refocus as run_refocus
from .stereo import StereoConfig, estimate_disparity
from .tracking import track_and_refocus

_IMAGE_SUFFIXES = {".png", ".ppm", ".pgm"}


@click.group()
@click.option("--threads", default=1, show_default=True, help="Worker threads for the per-layer blurs.")
@click.option(
    "--log-level",
    default="warning",
    show_default=True,
    type=click.Choice(["debug", "info", "warning", "error"]),
)
@click.pass_context
def main(ctx, threads, log_level):
    """Stereo refocusing toolkit: depth maps, synthetic bokeh, tracking."""
    logging.basicConfig(level=getattr(logging, log_level.upper()))
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


def _stereo_config(downscale, census_window, refine_radius, range_sigma):
    try:
        return StereoConfig(
            downscale_factor=downscale,
            census_window=census_window,
            refinement_radius=refine_radius,
            refinement_range_sigma=range_sigma,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


@main.command()
@click.argument("left", type=click.Path(exists=True, dir_okay=False))
@click.argument("right", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", required=True, help="Output PFM path.")
@click.option("--preview", default=None, help="Optional color preview PNG path.")
@click.option("--downscale", default=8, show_default=True)
@click.option("--census-window", default=7, show_default=True)
@click.option("--refine-radius", default=4, show_default=True)
@click.option("--range-sigma", default=0.1, show_default=True)
def depth(left, right, out, preview, downscale, census_window, refine_radius, range_sigma):
    """Estimate a disparity map from a rectified stereo pair."""
    cfg = _stereo_config(downscale, census_window, refine_radius, range_sigma)
    disp = estimate_disparity(load_image(left), load_image(right), cfg)
    save_disparity_pfm(disp, out)
    if preview:
        save_image(colorize_disparity(disp), preview)
    click.echo(f"wrote {out}")


def _load_scene(image, disparity, left, right):
    if image and disparity and not (left or right):
        return load_image(image), load_disparity_pfm(disparity)
    if left and right and not (image or disparity):
        img = load_image(left)
        return img, estimate_disparity(img, load_image(right))
    raise click.UsageError(
        "provide either --image with --disparity, or --left with --right"
    )


def _refocus_params(focus, aperture, kernel_cap, mode, alpha, d_min, d_max):
    try:
        return RefocusParams(
            focal_plane=focus,
            aperture=aperture,
            d_min=d_min,
            d_max=d_max,
            kernel_cap=kernel_cap,
            alpha=alpha,
            mode=mode,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


_scene_options = [
    click.option("--image", default=None, help="Input image (with --disparity)."),
    click.option("--disparity", default=None, help="Disparity PFM for --image."),
    click.option("--left", default=None, help="Left view (with --right)."),
    click.option("--right", default=None, help="Right view; disparity is estimated."),
]

_render_options = [
    click.option("--aperture", default=0.25, show_default=True),
    click.option("--kernel-cap", default=None, type=int, help="Odd kernel side bound; unbounded when omitted."),
    click.option("--mode", default="hard", show_default=True, type=click.Choice(["hard", "smooth"])),
    click.option("--alpha", default=1e3, show_default=True, help="Smooth-mask sharpness."),
    click.option("--d-min", default=None, type=float),
    click.option("--d-max", default=None, type=float),
]


def _add_options(options):
    def wrap(f):
        for option in reversed(options):
            f = option(f)
        return f

    return wrap


@main.command("refocus")
@_add_options(_scene_options)
@_add_options(_render_options)
@click.option("--focus", required=True, type=float, help="Focal plane disparity.")
@click.option("--out", "-o", required=True, help="Output PNG path.")
@click.pass_context
def refocus_cmd(ctx, image, disparity, left, right, aperture, kernel_cap, mode, alpha, d_min, d_max, focus, out):
    """Render one synthetically refocused image."""
    img, disp = _load_scene(image, disparity, left, right)
    params = _refocus_params(focus, aperture, kernel_cap, mode, alpha, d_min, d_max)
    save_image(run_refocus(img, disp, params, threads=ctx.obj["threads"]), out)
    click.echo(f"wrote {out}")


@main.command()
@_add_options(_scene_options)
@_add_options(_render_options)
@click.option("--start", required=True, type=float, help="First focal plane.")
@click.option("--stop", required=True, type=float, help="Last focal plane.")
@click.option("--count", required=True, type=int)
@click.option("--out-dir", required=True)
@click.pass_context
def sweep(ctx, image, disparity, left, right, aperture, kernel_cap, mode, alpha, d_min, d_max, start, stop, count, out_dir):
    """Render a focal sweep as numbered PNG frames plus a manifest."""
    if count < 1:
        raise click.UsageError("--count must be >= 1")
    img, disp = _load_scene(image, disparity, left, right)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    focals = np.linspace(start, stop, count)
    for i, focal in enumerate(focals):
        params = _refocus_params(float(focal), aperture, kernel_cap, mode, alpha, d_min, d_max)
        save_image(run_refocus(img, disp, params, threads=ctx.obj["threads"]), out / f"frame_{i:03d}.png")
    (out / "sweep.json").write_text(json.dumps({"focals": focals.tolist()}))
    click.echo(f"wrote {count} frames to {out}")


def _tracked_pairs(frames, disparities, rights):
    if (disparities is None) == (rights is None):
        raise click.UsageError("provide exactly one of --disparities or --rights")
    frame_paths = sorted(glob(frames))
    if not frame_paths:
        raise click.UsageError(f"no files match {frames!r}")
    aux_paths = sorted(glob(disparities or rights))
    if len(aux_paths) != len(frame_paths):
        raise click.UsageError(
            f"{len(frame_paths)} frames but {len(aux_paths)} auxiliary files"
        )

    def pairs():
        for frame_path, aux_path in zip(frame_paths, aux_paths):
            img = load_image(frame_path)
            if disparities:
                disp = load_disparity_pfm(aux_path)
            else:
                disp = estimate_disparity(img, load_image(aux_path))
            yield img, disp

    return pairs


@main.command()
@click.option("--frames", required=True, help="Glob for input frames (sorted).")
@click.option("--disparities", default=None, help="Glob for per-frame PFM maps.")
@click.option("--rights", default=None, help="Glob for right views; disparity is estimated per frame.")
@click.option("--box", nargs=4, type=float, required=True, metavar="X Y W H")
@click.option("--aperture", default=0.25, show_default=True)
@click.option("--beta", default=0.6, show_default=True, help="Focal plane smoothing in [0, 1).")
@click.option("--kernel-cap", default=None, type=int)
@click.option("--mode", default="hard", type=click.Choice(["hard", "smooth"]))
@click.option("--out-dir", required=True)
@click.pass_context
def track(ctx, frames, disparities, rights, box, aperture, beta, kernel_cap, mode, out_dir):
    """Track a box through a sequence and keep it in focus."""
    pairs = _tracked_pairs(frames, disparities, rights)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    first, second = itertools.tee(pairs())
    try:
        states = track_and_refocus(
            (fr for fr, _ in first),
            (dp for _, dp in second),
            box,
            aperture,
            beta=beta,
            kernel_cap=kernel_cap,
            mode=mode,
            threads=ctx.obj["threads"],
        )
        for state in states:
            path = out / f"frame_{state.index:04d}.png"
            save_image(state.image, path)
            records.append(
                {
                    "index": state.index,
                    "box": [float(v) for v in state.box],
                    "focal_plane": state.focal_plane,
                    "psr": state.psr if np.isfinite(state.psr) else None,
                    "lost": state.lost,
                    "path": str(path),
                }
            )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    (out / "track.json").write_text(json.dumps({"frames": records}, indent=2))
    click.echo(f"wrote {len(records)} frames to {out}")


@main.command()
@click.option("--reference", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", default=None, help="Naturalness model JSON; packaged model when omitted.")
def metrics(reference, test, model):
    """Print PSNR, SSIM, and the no-reference naturalness scores as JSON."""
    niqe_model = NiqeModel.from_json(Path(model).read_text()) if model else None
    try:
        report = evaluate_refocus(load_image(test), load_image(reference), niqe_model)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--width", default=1242, show_default=True)
@click.option("--height", default=375, show_default=True)
@click.option(
    "--aperture",
    "apertures",
    multiple=True,
    type=float,
    default=(0.1, 0.8),
    show_default=True,
)
@click.option(
    "--kernel-cap",
    "kernel_caps",
    multiple=True,
    default=("11", "inf"),
    show_default=True,
    help="Odd cap in pixels, or 'inf' for full-resolution blurring.",
)
@click.option("--runs", default=10, show_default=True)
@click.option("--d-max", default=16.0, show_default=True)
@click.pass_context
def bench(ctx, width, height, apertures, kernel_caps, runs, d_max):
    """Time the refocus hot path per (aperture, kernel cap) cell."""
    caps = []
    for cap in kernel_caps:
        if cap.lower() in ("inf", "none"):
            caps.append(None)
        else:
            caps.append(int(cap))
    try:
        reports = run_bench(
            width=width,
            height=height,
            apertures=apertures,
            kernel_caps=caps,
            runs=runs,
            d_max=d_max,
            threads=ctx.obj["threads"],
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(json.dumps([r.to_dict() for r in reports], indent=2))


@main.command("niqe-fit")
@click.argument("folder", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "-o", required=True, help="Output model JSON path.")
@click.option("--patch-size", default=96, show_default=True)
@click.option("--threshold", default=0.75, show_default=True)
def niqe_fit(folder, out, patch_size, threshold):
    """Fit a naturalness model from a folder of clean photographs."""
    paths = sorted(
        p for p in Path(folder).iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not paths:
        raise click.UsageError(f"no {'/'.join(sorted(_IMAGE_SUFFIXES))} images in {folder}")
    try:
        model = NiqeModel(patch_size=patch_size, sharpness_threshold=threshold)
        model.fit([load_image(p) for p in paths])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    Path(out).write_text(model.to_json())
    click.echo(f"fitted on {len(paths)} images, wrote {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--spill-dir", default=None, help="Persist evicted sessions here.")
@click.option("--max-sessions", default=16, show_default=True)
@click.option("--max-upload-mb", default=32, show_default=True)
@click.option("--ui-dir", default=None, help="Static frontend directory; frontend/dist is picked up automatically.")
@click.pass_context
def serve(ctx, host, port, spill_dir, max_sessions, max_upload_mb, ui_dir):
    """Run the HTTP rendering service."""
    import uvicorn

    from .server import create_app

    if ui_dir is None:
        # CWD first, then the checkout the package was installed from.
        checkout = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        for candidate in (Path("frontend") / "dist", checkout):
            if (candidate / "index.html").exists():
                ui_dir = candidate
                break
    app = create_app(
        max_live_sessions=max_sessions,
        spill_dir=spill_dir,
        max_upload_bytes=max_upload_mb * 1024 * 1024,
        threads=ctx.obj["threads"],
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port)
