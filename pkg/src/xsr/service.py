"""Stateless HTTP facade over rendering, SR inference and spectrum
visualization.

All state (volume, attenuation grid, optional model) is loaded once at
startup and never mutated, so identical URLs always return identical
bytes and requests can be served concurrently.  PNG is the wire format;
the offline PGM path stays the bit-exact reference.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__, imgio
from .drr import ViewPose, default_pitch, render
from .spectrum import log_magnitude
from .sr import load_weights
from .sr.bicubic import bicubic_resample
from .sr.network import _forward_acts
from .volume import OpacityLut, attenuation_grid, load_volume

RENDER_MODES = ("lr", "bicubic", "sr", "hr")
SIZE_MIN, SIZE_MAX = 64, 1024


class InfoResponse(BaseModel):
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    model: str
    version: str


def _bad_request(msg: str) -> Response:
    return JSONResponse(status_code=400, content={"detail": msg})


def _png_response(img: np.ndarray, elapsed_ms: float) -> Response:
    return Response(content=imgio.encode_png8(img), media_type="image/png",
                    headers={"X-Render-Ms": f"{elapsed_ms:.2f}"})


def _quantize8(img: np.ndarray) -> np.ndarray:
    """Snap to the 8-bit wire grid so downstream transforms (bicubic, SR,
    spectrum) see exactly what a client saving the PNG would see."""
    return imgio.to_u8(img).astype(np.float64) / 255.0


def create_app(volume_path, model_path=None, lut: OpacityLut | None = None,
               frontend_dir=None) -> FastAPI:
    """Build the service around one immutable volume and optional model."""
    lut = lut or OpacityLut()
    vol = load_volume(volume_path)
    mu = attenuation_grid(vol, lut)
    weights = load_weights(model_path) if model_path else None
    if frontend_dir is None:
        frontend_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"

    app = FastAPI(title="xsr", version=__version__)

    def render_view(rx: float, ry: float, size: int) -> np.ndarray:
        pose = ViewPose(theta_x=rx, theta_y=ry, det_w=size, det_h=size,
                        pitch=default_pitch(vol, size))
        return render(vol, lut, pose, mu=mu)

    def mode_image(rx: float, ry: float, size: int, mode: str) -> np.ndarray:
        """The four comparison pipelines share one native low-res pass."""
        if mode == "hr":
            return render_view(rx, ry, size)
        lr = _quantize8(render_view(rx, ry, size // 4))
        if mode == "lr":
            return lr
        up = bicubic_resample(lr, size, size)
        if mode == "bicubic":
            return up
        _, _, y = _forward_acts(weights, up.astype(weights.dtype)[None, None])
        return np.clip(y[0, 0].astype(np.float64), 0.0, 1.0)

    def check_params(rx: float, ry: float, size: int, mode: str | None = None):
        if not (math.isfinite(rx) and math.isfinite(ry)):
            return _bad_request("angles must be finite")
        if not SIZE_MIN <= size <= SIZE_MAX:
            return _bad_request(f"size must be in [{SIZE_MIN}, {SIZE_MAX}]")
        if mode is not None:
            if mode not in RENDER_MODES:
                return _bad_request(f"mode must be one of {RENDER_MODES}")
            if size % 4 != 0:
                return _bad_request("size must be divisible by 4")
            if mode == "sr" and weights is None:
                return JSONResponse(status_code=409,
                                    content={"detail": "no model loaded"})
        return None

    @app.get("/api/info", response_model=InfoResponse)
    def info():
        return InfoResponse(dims=(vol.nx, vol.ny, vol.nz), spacing=vol.spacing,
                            model="loaded" if weights is not None else "none",
                            version=__version__)

    @app.get("/api/render")
    def api_render(rx: float = Query(0.0), ry: float = Query(0.0),
                   size: int = Query(256)):
        err = check_params(rx, ry, size)
        if err is not None:
            return err
        t0 = time.perf_counter()
        img = render_view(rx, ry, size)
        return _png_response(img, (time.perf_counter() - t0) * 1e3)

    @app.get("/api/render_sr")
    def api_render_sr(rx: float = Query(0.0), ry: float = Query(0.0),
                      size: int = Query(256), mode: str = Query("bicubic")):
        err = check_params(rx, ry, size, mode)
        if err is not None:
            return err
        t0 = time.perf_counter()
        img = mode_image(rx, ry, size, mode)
        return _png_response(img, (time.perf_counter() - t0) * 1e3)

    @app.get("/api/spectrum")
    def api_spectrum(rx: float = Query(0.0), ry: float = Query(0.0),
                     size: int = Query(256), mode: str = Query("hr")):
        err = check_params(rx, ry, size, mode)
        if err is not None:
            return err
        t0 = time.perf_counter()
        img = _quantize8(mode_image(rx, ry, size, mode))
        return _png_response(log_magnitude(img), (time.perf_counter() - t0) * 1e3)

    if Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True),
                  name="viewer")
    return app
