"""Arbitrary-view synthetic X-ray rendering: orthographic rays marched
through the attenuation volume, Beer-Lambert display mapping."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

# The thread pool size is fixed at first parallel call; allow more threads
# than cores so thread-count invariance is testable on small machines.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))

import numba
from numba import njit, prange

from .volume import CtVolume, OpacityLut, attenuation_grid


@dataclass(frozen=True)
class ViewPose:
    """Detector pose: rotations (degrees) about the volume x and y axes,
    detector size in pixels, and pixel pitch in mm."""

    theta_x: float
    theta_y: float
    det_w: int
    det_h: int
    pitch: float

    def __post_init__(self):
        if self.det_w < 8 or self.det_h < 8:
            raise ValueError("detector must be at least 8x8 pixels")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        if not (math.isfinite(self.theta_x) and math.isfinite(self.theta_y)):
            raise ValueError("angles must be finite")


def default_pitch(vol: CtVolume, det_w: int) -> float:
    """Pitch that fits the volume's physical diagonal across the detector,
    so the full volume stays in view at any rotation."""
    return vol.diagonal_mm / det_w


def rotation_matrix(theta_x_deg: float, theta_y_deg: float) -> np.ndarray:
    ax = math.radians(theta_x_deg)
    ay = math.radians(theta_y_deg)
    rx = np.array([[1.0, 0.0, 0.0],
                   [0.0, math.cos(ax), -math.sin(ax)],
                   [0.0, math.sin(ax), math.cos(ax)]])
    ry = np.array([[math.cos(ay), 0.0, math.sin(ay)],
                   [0.0, 1.0, 0.0],
                   [-math.sin(ay), 0.0, math.cos(ay)]])
    return rx @ ry


def set_render_threads(n: int) -> int:
    """Clamp and apply the render thread count; returns the value in effect."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True, parallel=True, fastmath=True, nogil=True)
def _march(mu, sx, sy, sz, h, w, pitch,
           ux, uy, uz, vx, vy, vz, dx, dy, dz, step, out):
    nz, ny, nx = mu.shape
    cx = nx * sx * 0.5
    cy = ny * sy * 0.5
    cz = nz * sz * 0.5
    # trilinear support extends half a voxel beyond the physical box
    lox = -0.5 * sx
    hix = (nx + 0.5) * sx
    loy = -0.5 * sy
    hiy = (ny + 0.5) * sy
    loz = -0.5 * sz
    hiz = (nz + 0.5) * sz
    # per-step position increments in continuous voxel-index units
    ddx = np.float32(dx / sx * step)
    ddy = np.float32(dy / sy * step)
    ddz = np.float32(dz / sz * step)
    for i in prange(h):
        b = (i - (h - 1) * 0.5) * pitch
        for j in range(w):
            a = (j - (w - 1) * 0.5) * pitch
            ox = cx + a * ux + b * vx
            oy = cy + a * uy + b * vy
            oz = cz + a * uz + b * vz
            # slab clip of the infinite line o + t*d against the support box
            tmin = -1.0e300
            tmax = 1.0e300
            hit = True
            if abs(dx) > 1e-12:
                t1 = (lox - ox) / dx
                t2 = (hix - ox) / dx
                if t1 > t2:
                    t1, t2 = t2, t1
                tmin = max(tmin, t1)
                tmax = min(tmax, t2)
            elif ox < lox or ox > hix:
                hit = False
            if abs(dy) > 1e-12:
                t1 = (loy - oy) / dy
                t2 = (hiy - oy) / dy
                if t1 > t2:
                    t1, t2 = t2, t1
                tmin = max(tmin, t1)
                tmax = min(tmax, t2)
            elif oy < loy or oy > hiy:
                hit = False
            if abs(dz) > 1e-12:
                t1 = (loz - oz) / dz
                t2 = (hiz - oz) / dz
                if t1 > t2:
                    t1, t2 = t2, t1
                tmin = max(tmin, t1)
                tmax = min(tmax, t2)
            elif oz < loz or oz > hiz:
                hit = False
            if not hit or tmax <= tmin:
                out[i, j] = 0.0
                continue

            n_steps = int(math.ceil((tmax - tmin) / step))
            # entry point in continuous voxel-index units
            px = np.float32((ox + tmin * dx) / sx - 0.5)
            py = np.float32((oy + tmin * dy) / sy - 0.5)
            pz = np.float32((oz + tmin * dz) / sz - 0.5)
            acc = np.float32(0.0)
            for k in range(n_steps):
                t = np.float32(k) + np.float32(0.5)
                x = px + ddx * t
                y = py + ddy * t
                z = pz + ddz * t
                ix = int(np.floor(x))
                iy = int(np.floor(y))
                iz = int(np.floor(z))
                if 0 <= ix < nx - 1 and 0 <= iy < ny - 1 and 0 <= iz < nz - 1:
                    fx = x - np.float32(ix)
                    fy = y - np.float32(iy)
                    fz = z - np.float32(iz)
                    c000 = mu[iz, iy, ix]
                    c100 = mu[iz, iy, ix + 1]
                    c010 = mu[iz, iy + 1, ix]
                    c110 = mu[iz, iy + 1, ix + 1]
                    c001 = mu[iz + 1, iy, ix]
                    c101 = mu[iz + 1, iy, ix + 1]
                    c011 = mu[iz + 1, iy + 1, ix]
                    c111 = mu[iz + 1, iy + 1, ix + 1]
                    c00 = c000 + (c100 - c000) * fx
                    c10 = c010 + (c110 - c010) * fx
                    c01 = c001 + (c101 - c001) * fx
                    c11 = c011 + (c111 - c011) * fx
                    c0 = c00 + (c10 - c00) * fy
                    c1 = c01 + (c11 - c01) * fy
                    acc += c0 + (c1 - c0) * fz
                else:
                    # boundary ramp: neighbors outside the grid count as air
                    fx = x - np.float32(ix)
                    fy = y - np.float32(iy)
                    fz = z - np.float32(iz)
                    s = np.float32(0.0)
                    for oz8 in range(2):
                        kz = iz + oz8
                        wz = fz if oz8 == 1 else np.float32(1.0) - fz
                        if kz < 0 or kz >= nz:
                            continue
                        for oy8 in range(2):
                            ky = iy + oy8
                            wy = fy if oy8 == 1 else np.float32(1.0) - fy
                            if ky < 0 or ky >= ny:
                                continue
                            for ox8 in range(2):
                                kx = ix + ox8
                                wx = fx if ox8 == 1 else np.float32(1.0) - fx
                                if kx < 0 or kx >= nx:
                                    continue
                                s += mu[kz, ky, kx] * wz * wy * wx
                    acc += s
            val = 1.0 - math.exp(-float(acc) * step)
            if val < 0.0:
                val = 0.0
            elif val > 1.0:
                val = 1.0
            out[i, j] = val


def render(vol: CtVolume, lut: OpacityLut, pose: ViewPose,
           mu: np.ndarray | None = None) -> np.ndarray:
    """Render one DRR; returns a float64 (det_h, det_w) image in [0,1].

    Fixed-step marching at min(spacing)/2 with trilinear sampling of the
    attenuation grid, displayed as 1 - exp(-integral).  Each pixel is
    computed independently, so output is bitwise identical for any thread
    count.  Pass ``mu`` (from :func:`xsr.volume.attenuation_grid`) to amortize
    the HU-to-mu conversion over many renders.
    """
    if any(n < 2 for n in vol.voxels.shape):
        raise ValueError("degenerate volume: every dim must be >= 2")
    if mu is None:
        mu = attenuation_grid(vol, lut)
    sx, sy, sz = vol.spacing
    step = min(sx, sy, sz) / 2.0
    rot = rotation_matrix(pose.theta_x, pose.theta_y)
    u = rot @ np.array([1.0, 0.0, 0.0])
    v = rot @ np.array([0.0, 1.0, 0.0])
    d = rot @ np.array([0.0, 0.0, 1.0])
    out = np.empty((pose.det_h, pose.det_w), dtype=np.float64)
    _march(mu, sx, sy, sz, pose.det_h, pose.det_w, pose.pitch,
           u[0], u[1], u[2], v[0], v[1], v[2], d[0], d[1], d[2], step, out)
    return out
