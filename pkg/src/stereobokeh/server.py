"""HTTP service around the refocusing pipeline.

Clients upload a rectified stereo pair once to open a session, then render
against it repeatedly (single refocus, focal sweeps as ZIP bundles, disparity
probes and previews). The disparity map is computed lazily on first use,
once per session, under a per-session lock. Sessions are kept in an LRU of
bounded size; with a spill directory configured, evicted sessions are
persisted and transparently reloaded instead of expiring.
"""

import io
import itertools
import re
import threading
import uuid
import zipfile
from collections import OrderedDict
from glob import glob
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import Response
from pydantic import BaseModel, Field

from .image_io import (
    colorize_disparity,
    load_disparity_pfm,
    load_image,
    load_image_bytes,
    pack_pfm_bytes,
    pack_png_bytes,
    save_image,
)
from .refocus import RefocusParams, refocus
from .stereo import estimate_disparity
from .tracking import track_and_refocus

DEFAULT_MAX_UPLOAD_BYTES = 32 * 1024 * 1024
DEFAULT_MAX_LIVE_SESSIONS = 16

_SESSION_ID = re.compile(r"^[0-9a-f]{32}$")


class _Session:
    def __init__(self, left: np.ndarray, right: np.ndarray):
        self.left = left
        self.right = right
        self.disparity = None
        self.lock = threading.RLock()


class SessionStore:
    """Bounded LRU of stereo sessions with optional disk spill.

    Evicted sessions are written to the spill directory (when set) and
    reloaded on the next access, so a session id stays valid for as long as
    its file exists. Without a spill directory, eviction forgets the session.
    """

    def __init__(self, max_live: int = DEFAULT_MAX_LIVE_SESSIONS, spill_dir=None):
        if max_live < 1:
            raise ValueError("max_live must be >= 1")
        self.max_live = max_live
        self.spill_dir = Path(spill_dir) if spill_dir is not None else None
        if self.spill_dir is not None:
            self.spill_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._live = OrderedDict()

    def create(self, left: np.ndarray, right: np.ndarray) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._live[sid] = _Session(left, right)
            self._evict()
        return sid

    def get(self, sid: str) -> _Session:
        with self._lock:
            if sid in self._live:
                self._live.move_to_end(sid)
                return self._live[sid]
            sess = self._load_spilled(sid)
            if sess is None:
                raise KeyError(sid)
            self._live[sid] = sess
            self._evict()
            return sess

    def __len__(self) -> int:
        with self._lock:
            return len(self._live)

    def _evict(self):
        while len(self._live) > self.max_live:
            sid, sess = self._live.popitem(last=False)
            if self.spill_dir is not None:
                self._spill(sid, sess)

    def _spill(self, sid: str, sess: _Session):
        with sess.lock:
            payload = {"left": sess.left, "right": sess.right}
            if sess.disparity is not None:
                payload["disparity"] = sess.disparity
            np.savez_compressed(self.spill_dir / f"{sid}.npz", **payload)

    def _load_spilled(self, sid: str):
        if self.spill_dir is None or not _SESSION_ID.fullmatch(sid):
            return None
        path = self.spill_dir / f"{sid}.npz"
        if not path.exists():
            return None
        with np.load(path) as blob:
            sess = _Session(blob["left"], blob["right"])
            if "disparity" in blob:
                sess.disparity = blob["disparity"]
        return sess


class RefocusRequest(BaseModel):
    focus: float
    aperture: float = Field(default=0.25, gt=0)
    kernel_cap: Optional[int] = Field(default=None, ge=3)
    mode: Literal["hard", "smooth"] = "hard"
    alpha: float = Field(default=1e3, gt=0)
    d_min: Optional[float] = None
    d_max: Optional[float] = None


class SweepRequest(BaseModel):
    start: float
    stop: float
    count: int = Field(ge=1, le=256)
    aperture: float = Field(default=0.25, gt=0)
    kernel_cap: Optional[int] = Field(default=None, ge=3)
    mode: Literal["hard", "smooth"] = "hard"
    alpha: float = Field(default=1e3, gt=0)
    d_min: Optional[float] = None
    d_max: Optional[float] = None


class ProbeRequest(BaseModel):
    x: int = Field(ge=0)
    y: int = Field(ge=0)


class TrackRequest(BaseModel):
    frames: str
    disparities: Optional[str] = None
    rights: Optional[str] = None
    box: List[float] = Field(min_length=4, max_length=4)
    aperture: float = Field(gt=0)
    beta: float = Field(default=0.6, ge=0, lt=1)
    kernel_cap: Optional[int] = Field(default=None, ge=3)
    mode: Literal["hard", "smooth"] = "hard"
    out_dir: Optional[str] = None


def create_app(
    max_live_sessions: int = DEFAULT_MAX_LIVE_SESSIONS,
    spill_dir=None,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
    threads: int = 1,
    ui_dir=None,
) -> FastAPI:
    app = FastAPI(title="stereobokeh")
    store = SessionStore(max_live=max_live_sessions, spill_dir=spill_dir)
    app.state.store = store
    app.state.threads = threads

    def _session(sid: str) -> _Session:
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    def _disparity(sess: _Session) -> np.ndarray:
        with sess.lock:
            if sess.disparity is None:
                sess.disparity = estimate_disparity(sess.left, sess.right)
            return sess.disparity

    def _params(req, focus: float) -> RefocusParams:
        try:
            return RefocusParams(
                focal_plane=focus,
                aperture=req.aperture,
                d_min=req.d_min,
                d_max=req.d_max,
                kernel_cap=req.kernel_cap,
                alpha=req.alpha,
                mode=req.mode,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions", status_code=201)
    async def create_session(left: UploadFile = File(...), right: UploadFile = File(...)):
        blobs = []
        for upload in (left, right):
            data = await upload.read()
            if len(data) > max_upload_bytes:
                raise HTTPException(status_code=413, detail="upload too large")
            blobs.append(data)
        try:
            left_img = load_image_bytes(blobs[0])
            right_img = load_image_bytes(blobs[1])
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if left_img.shape != right_img.shape:
            raise HTTPException(status_code=422, detail="stereo pair dimensions differ")
        return {"id": store.create(left_img, right_img)}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        sess = _session(sid)
        return {
            "id": sid,
            "width": int(sess.left.shape[-1]),
            "height": int(sess.left.shape[-2]),
            "channels": 1 if sess.left.ndim == 2 else int(sess.left.shape[0]),
            "has_disparity": sess.disparity is not None,
        }

    @app.get("/sessions/{sid}/disparity.pfm")
    def disparity_pfm(sid: str):
        disp = _disparity(_session(sid))
        return Response(pack_pfm_bytes(disp), media_type="image/x-portable-floatmap")

    @app.get("/sessions/{sid}/disparity.png")
    def disparity_png(sid: str):
        disp = _disparity(_session(sid))
        return Response(
            pack_png_bytes(colorize_disparity(disp)), media_type="image/png"
        )

    @app.post("/sessions/{sid}/refocus")
    def session_refocus(sid: str, req: RefocusRequest):
        sess = _session(sid)
        disp = _disparity(sess)
        out = refocus(sess.left, disp, _params(req, req.focus), threads=app.state.threads)
        return Response(pack_png_bytes(out), media_type="image/png")

    @app.post("/sessions/{sid}/sweep")
    def session_sweep(sid: str, req: SweepRequest):
        sess = _session(sid)
        disp = _disparity(sess)
        focals = np.linspace(req.start, req.stop, req.count)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
            for i, focal in enumerate(focals):
                frame = refocus(
                    sess.left, disp, _params(req, float(focal)), threads=app.state.threads
                )
                zf.writestr(f"frame_{i:03d}.png", pack_png_bytes(frame))
            zf.writestr("sweep.json", '{"focals": [%s]}' % ", ".join(f"{f}" for f in focals))
        return Response(buf.getvalue(), media_type="application/zip")

    @app.post("/sessions/{sid}/probe")
    def session_probe(sid: str, req: ProbeRequest):
        disp = _disparity(_session(sid))
        h, w = disp.shape
        if req.x >= w or req.y >= h:
            raise HTTPException(status_code=422, detail="probe point outside image")
        return {"disparity": float(disp[req.y, req.x])}

    @app.post("/videos/track")
    def video_track(req: TrackRequest):
        if (req.disparities is None) == (req.rights is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of disparities or rights"
            )
        frame_paths = sorted(glob(req.frames))
        if not frame_paths:
            raise HTTPException(status_code=422, detail="frame pattern matched no files")
        aux_paths = sorted(glob(req.disparities or req.rights))
        if len(aux_paths) != len(frame_paths):
            raise HTTPException(
                status_code=422,
                detail=f"{len(frame_paths)} frames but {len(aux_paths)} auxiliary files",
            )
        out_dir = Path(req.out_dir) if req.out_dir else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

        def pairs():
            for frame_path, aux_path in zip(frame_paths, aux_paths):
                img = load_image(frame_path)
                if req.disparities:
                    disp = load_disparity_pfm(aux_path)
                else:
                    disp = estimate_disparity(img, load_image(aux_path))
                yield img, disp

        first, second = itertools.tee(pairs())
        records = []
        try:
            states = track_and_refocus(
                (fr for fr, _ in first),
                (dp for _, dp in second),
                tuple(req.box),
                req.aperture,
                beta=req.beta,
                kernel_cap=req.kernel_cap,
                mode=req.mode,
                threads=app.state.threads,
            )
            for state in states:
                record = {
                    "index": state.index,
                    "box": [float(v) for v in state.box],
                    "focal_plane": state.focal_plane,
                    "psr": state.psr if np.isfinite(state.psr) else None,
                    "lost": state.lost,
                }
                if out_dir is not None:
                    path = out_dir / f"frame_{state.index:04d}.png"
                    save_image(state.image, path)
                    record["path"] = str(path)
                records.append(record)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"frames": records}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
