"""CT volume container, slice-gap resampling, HU-to-attenuation lookup,
and procedural ellipsoid phantoms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HU_MIN = -1024
HU_MAX = 4095
HU_AIR = -1000

DEFAULT_MU_WATER = 0.02  # mm^-1, representative diagnostic-energy value


class VolumeFormatError(ValueError):
    """Raised for malformed header/raw volume files."""


@dataclass(frozen=True)
class CtVolume:
    """Signed-HU voxel grid with per-axis physical spacing.

    ``voxels`` is an int16 array of shape (nz, ny, nx); C order makes x the
    fastest-varying axis.  Instances are immutable and safe to share across
    threads.
    """

    voxels: np.ndarray
    spacing: tuple[float, float, float]  # (sx, sy, sz) in mm

    def __post_init__(self):
        v = np.asarray(self.voxels, dtype=np.int16)
        if v.ndim != 3 or any(n < 2 for n in v.shape):
            raise ValueError(f"volume dims must all be >= 2, got {v.shape}")
        if v.min() < HU_MIN or v.max() > HU_MAX:
            raise ValueError(f"HU values outside [{HU_MIN}, {HU_MAX}]")
        sx, sy, sz = self.spacing
        if not (sx > 0 and sy > 0 and sz > 0):
            raise ValueError(f"spacings must be positive, got {self.spacing}")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "voxels", v)
        object.__setattr__(self, "spacing", (float(sx), float(sy), float(sz)))

    @property
    def nx(self) -> int:
        return self.voxels.shape[2]

    @property
    def ny(self) -> int:
        return self.voxels.shape[1]

    @property
    def nz(self) -> int:
        return self.voxels.shape[0]

    @property
    def extent_mm(self) -> tuple[float, float, float]:
        """Physical size (nx*sx, ny*sy, nz*sz)."""
        return (self.nx * self.spacing[0],
                self.ny * self.spacing[1],
                self.nz * self.spacing[2])

    @property
    def diagonal_mm(self) -> float:
        return float(np.linalg.norm(self.extent_mm))


@dataclass(frozen=True)
class OpacityLut:
    """HU -> linear attenuation (mm^-1) lookup.

    Without an override table the Hounsfield identity applies:
    mu = max(0, mu_water * (1 + HU/1000)), which gives mu(-1000) = 0 and
    mu(0) = mu_water.  An override table is a sequence of (HU, mu) pairs,
    strictly increasing in HU, interpolated piecewise-linearly and clamped
    at both ends.
    """

    mu_water: float = DEFAULT_MU_WATER
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.mu_water < 0:
            raise ValueError("mu_water must be >= 0")
        if self.table is not None:
            t = tuple((float(h), float(m)) for h, m in self.table)
            hus = [h for h, _ in t]
            if len(t) < 2 or any(b <= a for a, b in zip(hus, hus[1:])):
                raise ValueError("override table needs >= 2 breakpoints, strictly increasing in HU")
            if any(m < 0 for _, m in t):
                raise ValueError("attenuation values must be >= 0")
            object.__setattr__(self, "table", t)


def mu_of(lut: OpacityLut, hu) -> np.ndarray | float:
    """Attenuation coefficient for a HU value (scalar or array), mm^-1."""
    hu = np.asarray(hu, dtype=np.float64)
    if lut.table is None:
        out = np.maximum(0.0, lut.mu_water * (1.0 + hu / 1000.0))
    else:
        hs = np.array([h for h, _ in lut.table])
        ms = np.array([m for _, m in lut.table])
        out = np.interp(hu, hs, ms)  # clamps at the ends
    return float(out) if out.ndim == 0 else out


def attenuation_grid(vol: CtVolume, lut: OpacityLut) -> np.ndarray:
    """Precompute the float32 mu grid a renderer samples from."""
    return mu_of(lut, vol.voxels).astype(np.float32)


def resample_axis(vol: CtVolume, axis: str, target_spacing: float) -> CtVolume:
    """Densify one axis by linear interpolation between existing slices.

    Slices sit at positions 0, s, 2s, ... along the axis; the resampled
    grid covers the same span [0, (n-1)*s] at the new spacing.  Only
    densification is supported (target <= current spacing).
    """
    ax = {"x": 2, "y": 1, "z": 0}.get(axis)
    if ax is None:
        raise ValueError(f"axis must be one of x/y/z, got {axis!r}")
    s_old = vol.spacing[2 - ax]
    if not target_spacing > 0:
        raise ValueError("target_spacing must be positive")
    if target_spacing > s_old * (1 + 1e-12):
        raise ValueError(
            f"refusing to coarsen axis {axis}: {target_spacing} > current {s_old}")

    n_old = vol.voxels.shape[ax]
    span = (n_old - 1) * s_old
    n_new = int(math.floor(span / target_spacing + 1e-9)) + 1
    pos = np.arange(n_new) * target_spacing / s_old  # in old-slice units
    i0 = np.minimum(np.floor(pos).astype(np.int64), n_old - 2)
    frac = pos - i0

    v = np.moveaxis(vol.voxels, ax, 0).astype(np.float64)
    out = v[i0] * (1.0 - frac)[:, None, None] + v[i0 + 1] * frac[:, None, None]
    out = np.moveaxis(np.rint(out), 0, ax).astype(np.int16)

    spacing = list(vol.spacing)
    spacing[2 - ax] = float(target_spacing)
    return CtVolume(out, tuple(spacing))


@dataclass(frozen=True)
class Ellipsoid:
    """One phantom primitive: an axis-aligned ellipsoid in mm coordinates.

    ``texture_amp`` > 0 adds a band-limited texture (sum of 8 random-phase
    sinusoids with wavelengths drawn from ``texture_wavelengths``, in
    voxels) on top of the base HU inside the primitive.
    """

    center: tuple[float, float, float]
    radii: tuple[float, float, float]
    hu: float
    texture_amp: float = 0.0
    texture_wavelengths: tuple[float, float] = (2.0, 8.0)

    def __post_init__(self):
        if any(r <= 0 for r in self.radii):
            raise ValueError("ellipsoid radii must be positive")


@dataclass(frozen=True)
class PhantomSpec:
    seed: int
    primitives: tuple[Ellipsoid, ...]
    dims: tuple[int, int, int] = (128, 128, 128)  # (nx, ny, nz)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.primitives) == 0:
            raise ValueError("phantom needs at least one primitive")
        if any(n < 16 for n in self.dims):
            raise ValueError(f"phantom dims must be >= 16 per axis, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "primitives", tuple(self.primitives))


def _texture_field(rng: np.random.Generator, prim: Ellipsoid,
                   zz, yy, xx, spacing) -> np.ndarray:
    """Band-limited texture sampled on the (z,y,x) index grids."""
    lo, hi = prim.texture_wavelengths
    acc = np.zeros(np.broadcast_shapes(zz.shape, yy.shape, xx.shape))
    for _ in range(8):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        wavelength = rng.uniform(lo, hi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        k = 2.0 * np.pi / wavelength
        acc += np.sin(k * (d[0] * xx + d[1] * yy + d[2] * zz) + phase)
    return prim.texture_amp * acc / 8.0


def generate_phantom(spec: PhantomSpec) -> CtVolume:
    """Rasterize the primitives onto a background of air (-1000 HU).

    Later primitives override earlier ones where they overlap, so list
    order encodes nesting: the last containing primitive is the innermost.
    Deterministic for a fixed seed.
    """
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    hu = np.full((nz, ny, nx), float(HU_AIR))

    # voxel-center coordinates in mm
    cx = (np.arange(nx) + 0.5) * sx
    cy = (np.arange(ny) + 0.5) * sy
    cz = (np.arange(nz) + 0.5) * sz

    rng = np.random.default_rng(spec.seed)
    for prim in spec.primitives:
        prng = np.random.default_rng(rng.integers(0, 2**63 - 1))
        ex = (cx - prim.center[0]) / prim.radii[0]
        ey = (cy - prim.center[1]) / prim.radii[1]
        ez = (cz - prim.center[2]) / prim.radii[2]
        inside = (ez[:, None, None] ** 2 + ey[None, :, None] ** 2
                  + ex[None, None, :] ** 2) <= 1.0
        value = float(prim.hu)
        if prim.texture_amp > 0.0:
            tex = _texture_field(
                prng, prim,
                np.arange(nz)[:, None, None].astype(np.float64),
                np.arange(ny)[None, :, None].astype(np.float64),
                np.arange(nx)[None, None, :].astype(np.float64),
                spec.spacing)
            hu = np.where(inside, value + tex, hu)
        else:
            hu = np.where(inside, value, hu)

    hu = np.clip(np.rint(hu), HU_MIN, HU_MAX).astype(np.int16)
    return CtVolume(hu, spec.spacing)


def default_head_spec(seed: int = 0,
                      dims: tuple[int, int, int] = (128, 128, 128),
                      spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> PhantomSpec:
    """Head-like phantom: textured bone shell, soft interior, random blobs.

    The bone ellipsoid carries band-limited texture so projections contain
    real high-frequency content; a slightly smaller soft-tissue ellipsoid
    hollows it into a shell, and 2-4 random internal ellipsoids add
    mid-scale structure.
    """
    nx, ny, nz = dims
    sx, sy, sz = spacing
    center = (nx * sx / 2.0, ny * sy / 2.0, nz * sz / 2.0)
    outer = (0.42 * nx * sx, 0.45 * ny * sy, 0.46 * nz * sz)
    inner = tuple(r - max(2.5 * min(spacing), 0.06 * min(outer)) for r in outer)

    rng = np.random.default_rng(seed)
    prims = [
        Ellipsoid(center, outer, hu=1200.0, texture_amp=200.0),
        Ellipsoid(center, inner, hu=40.0),
    ]
    for _ in range(int(rng.integers(2, 5))):
        c = tuple(center[i] + rng.uniform(-0.45, 0.45) * inner[i] for i in range(3))
        r = tuple(rng.uniform(0.08, 0.22) * inner[i] for i in range(3))
        prims.append(Ellipsoid(c, r, hu=float(rng.uniform(-100.0, 300.0))))
    return PhantomSpec(seed=seed, primitives=tuple(prims), dims=dims, spacing=spacing)


def save_volume(vol: CtVolume, header_path) -> None:
    """Write the text header and little-endian int16 raw payload."""
    header_path = Path(header_path)
    raw_name = header_path.stem + ".raw"
    header_path.parent.mkdir(parents=True, exist_ok=True)
    (header_path.parent / raw_name).write_bytes(
        vol.voxels.astype("<i2").tobytes())
    sx, sy, sz = vol.spacing
    header_path.write_text(
        f"dims = {vol.nx} {vol.ny} {vol.nz}\n"
        f"spacing = {sx:.17g} {sy:.17g} {sz:.17g}\n"
        f"dtype = int16le\n"
        f"raw = {raw_name}\n")


def load_volume(header_path) -> CtVolume:
    """Load a volume from its header file; errors on any inconsistency."""
    header_path = Path(header_path)
    if not header_path.is_file():
        raise FileNotFoundError(f"no such header file: {header_path}")
    fields = {}
    for line in header_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise VolumeFormatError(f"malformed header line: {line!r}")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()

    missing = {"dims", "spacing", "dtype", "raw"} - fields.keys()
    if missing:
        raise VolumeFormatError(f"header missing keys: {sorted(missing)}")
    if fields["dtype"] != "int16le":
        raise VolumeFormatError(f"unsupported dtype {fields['dtype']!r}")
    try:
        nx, ny, nz = (int(t) for t in fields["dims"].split())
        sx, sy, sz = (float(t) for t in fields["spacing"].split())
    except ValueError as exc:
        raise VolumeFormatError(f"bad dims/spacing in header: {exc}") from exc

    raw_path = header_path.parent / fields["raw"]
    if not raw_path.is_file():
        raise FileNotFoundError(f"raw payload not found: {raw_path}")
    payload = raw_path.read_bytes()
    expected = nx * ny * nz * 2
    if len(payload) != expected:
        raise VolumeFormatError(
            f"raw size mismatch: header implies {expected} bytes, file has {len(payload)}")
    voxels = np.frombuffer(payload, dtype="<i2").reshape(nz, ny, nx)
    try:
        return CtVolume(voxels.astype(np.int16), (sx, sy, sz))
    except ValueError as exc:
        raise VolumeFormatError(str(exc)) from exc
