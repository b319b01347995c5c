"""Dataset generation: view grids rendered from a volume, fixed-position
patch cropping, HR/LR pair construction, and on-disk round-tripping."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgio
from .drr import ViewPose, default_pitch, render
from .sr.bicubic import bicubic_resample
from .volume import CtVolume, OpacityLut, attenuation_grid

# four corners plus center of a 512x512 view, 160x160 each
PATCH_OFFSETS = ((0, 0), (0, 352), (352, 0), (352, 352), (176, 176))
PATCH = 160


class DatasetError(ValueError):
    """Raised for inconsistent on-disk datasets."""


@dataclass(frozen=True)
class DatasetSpec:
    grid_n: int = 15
    step_deg: float = 24.0
    test_step_deg: float = 20.0
    patch: int = PATCH
    patches_per_image: int = 5
    scale: int = 4
    ref_rotation_range: float = 45.0
    seed: int = 0
    view_size: int = 512
    n_test: int = 9
    fov_scale: float = 0.6  # fraction of the diagonal-fit field of view

    def __post_init__(self):
        if self.grid_n < 1:
            raise ValueError("grid_n must be >= 1")
        if self.step_deg <= 0 or self.test_step_deg <= 0:
            raise ValueError("angle steps must be positive")
        if self.patch % self.scale != 0:
            raise ValueError("patch size must be divisible by scale")
        if self.n_test < 1:
            raise ValueError("n_test must be >= 1")
        if not 0 < self.fov_scale <= 1:
            raise ValueError("fov_scale must be in (0, 1]")


@dataclass(frozen=True)
class SamplePair:
    """One training pair.  ``lr`` is always regenerable from ``hr``:
    lr == quantize16(bicubic_resample(hr, patch/scale, patch/scale))."""

    hr: np.ndarray
    lr: np.ndarray
    series: str = "phantom"
    theta_x: float = 0.0
    theta_y: float = 0.0
    patch_index: int = -1


def generate_views(vol: CtVolume, lut: OpacityLut, spec: DatasetSpec,
                   mode: str = "train") -> list[tuple[ViewPose, np.ndarray]]:
    """Render the training grid or a seeded sample of the test lattice.

    Train poses cover {0, step, ..., step*(grid_n-1)} degrees on both
    rotation axes.  Test poses are drawn without replacement from the full
    360-degree lattice at test_step_deg.
    """
    if mode == "train":
        angles = [i * spec.step_deg for i in range(spec.grid_n)]
        poses = [(tx, ty) for tx in angles for ty in angles]
    elif mode == "test":
        k = int(round(360.0 / spec.test_step_deg))
        lattice = [(i * spec.test_step_deg, j * spec.test_step_deg)
                   for i in range(k) for j in range(k)]
        rng = np.random.default_rng(spec.seed)
        picks = rng.choice(len(lattice), size=min(spec.n_test, len(lattice)),
                           replace=False)
        poses = [lattice[i] for i in picks]
    else:
        raise ValueError(f"mode must be train or test, got {mode!r}")

    mu = attenuation_grid(vol, lut)
    # frame the subject tighter than the diagonal-fit default so the fixed
    # patch positions all land on real content
    pitch = default_pitch(vol, spec.view_size) * spec.fov_scale
    out = []
    for tx, ty in poses:
        pose = ViewPose(theta_x=tx, theta_y=ty, det_w=spec.view_size,
                        det_h=spec.view_size, pitch=pitch)
        out.append((pose, render(vol, lut, pose, mu=mu)))
    return out


def crop_patches(img: np.ndarray) -> list[np.ndarray]:
    """Five fixed 160x160 crops: four corners plus the center."""
    h, w = img.shape
    if h < 512 or w < 512:
        raise ValueError(f"image must be at least 512x512, got {img.shape}")
    return [img[r:r + PATCH, c:c + PATCH].copy() for r, c in PATCH_OFFSETS]


def make_pairs(patches, series: str = "phantom", theta_x: float = 0.0,
               theta_y: float = 0.0, scale: int = 4) -> list[SamplePair]:
    """Quantize each patch to the 16-bit storage grid and derive its LR
    counterpart by antialiased bicubic downsampling."""
    out = []
    for i, p in enumerate(patches):
        if p.shape != (PATCH, PATCH):
            raise ValueError(f"patches must be {PATCH}x{PATCH}, got {p.shape}")
        hr = imgio.quantize16(p)
        lr = imgio.quantize16(bicubic_resample(hr, PATCH // scale, PATCH // scale))
        out.append(SamplePair(hr=hr, lr=lr, series=series,
                              theta_x=theta_x, theta_y=theta_y, patch_index=i))
    return out


def generate_reference(vol: CtVolume, lut: OpacityLut, pose: ViewPose,
                       spec: DatasetSpec, rng: np.random.Generator,
                       mu: np.ndarray | None = None) -> np.ndarray:
    """Re-render the view with both angles offset by seeded uniform draws in
    [-ref_rotation_range, +ref_rotation_range].  Emitted for forward
    compatibility; the trainer here does not consume references."""
    r = spec.ref_rotation_range
    off = rng.uniform(-r, r, size=2)
    ref_pose = ViewPose(theta_x=pose.theta_x + off[0],
                        theta_y=pose.theta_y + off[1],
                        det_w=pose.det_w, det_h=pose.det_h, pitch=pose.pitch)
    return render(vol, lut, ref_pose, mu=mu)


def write_dataset(pairs, out_dir, refs=None) -> None:
    """Persist pairs as 16-bit PGMs plus a provenance manifest."""
    out_dir = Path(out_dir)
    (out_dir / "hr").mkdir(parents=True, exist_ok=True)
    (out_dir / "lr").mkdir(parents=True, exist_ok=True)
    if refs is not None:
        (out_dir / "ref").mkdir(parents=True, exist_ok=True)
    lines = ["index\tseries\ttheta_x\ttheta_y\tpatch"]
    for i, pair in enumerate(pairs):
        name = f"{i:05d}.pgm"
        imgio.write_pgm16(out_dir / "hr" / name, pair.hr)
        imgio.write_pgm16(out_dir / "lr" / name, pair.lr)
        if refs is not None:
            imgio.write_pgm16(out_dir / "ref" / name, refs[i])
        lines.append(f"{i}\t{pair.series}\t{pair.theta_x:.9g}\t{pair.theta_y:.9g}"
                     f"\t{pair.patch_index}")
    (out_dir / "manifest.tsv").write_text("\n".join(lines) + "\n")


def read_dataset(in_dir) -> list[SamplePair]:
    """Load a dataset directory; fails loudly on manifest/file mismatches."""
    in_dir = Path(in_dir)
    manifest = in_dir / "manifest.tsv"
    if not manifest.is_file():
        raise DatasetError(f"missing manifest: {manifest}")
    rows = manifest.read_text().splitlines()
    if not rows or rows[0].split("\t")[0] != "index":
        raise DatasetError(f"{manifest}: missing header row")
    entries = [r.split("\t") for r in rows[1:] if r.strip()]

    for sub in ("hr", "lr"):
        have = sorted((in_dir / sub).glob("*.pgm")) if (in_dir / sub).is_dir() else []
        if len(have) != len(entries):
            raise DatasetError(
                f"{in_dir}: manifest lists {len(entries)} pairs but {sub}/ has {len(have)} files")

    pairs = []
    for row in entries:
        if len(row) != 5:
            raise DatasetError(f"{manifest}: malformed row {row!r}")
        idx, series, tx, ty, patch = row
        name = f"{int(idx):05d}.pgm"
        hr_path = in_dir / "hr" / name
        lr_path = in_dir / "lr" / name
        if not hr_path.is_file() or not lr_path.is_file():
            raise DatasetError(f"{in_dir}: missing image files for index {idx}")
        pairs.append(SamplePair(hr=imgio.read_pgm16(hr_path),
                                lr=imgio.read_pgm16(lr_path),
                                series=series, theta_x=float(tx),
                                theta_y=float(ty), patch_index=int(patch)))
    return pairs


def build_dataset(vol: CtVolume, lut: OpacityLut, spec: DatasetSpec, out_dir,
                  with_refs: bool = False) -> tuple[int, int]:
    """Generate and persist the train and test splits under out_dir.

    Train pairs are 160x160 patches (five per view); test pairs are full
    views with LR at view_size/scale.  Returns (n_train, n_test).
    """
    out_dir = Path(out_dir)
    mu = attenuation_grid(vol, lut)
    rng = np.random.default_rng(spec.seed)

    train_pairs, train_refs = [], [] if with_refs else None
    for pose, img in generate_views(vol, lut, spec, mode="train"):
        pairs = make_pairs(crop_patches(img), theta_x=pose.theta_x,
                           theta_y=pose.theta_y, scale=spec.scale)
        train_pairs.extend(pairs)
        if with_refs:
            ref = generate_reference(vol, lut, pose, spec, rng, mu=mu)
            train_refs.extend(imgio.quantize16(p) for p in crop_patches(ref))
    write_dataset(train_pairs, out_dir / "train", refs=train_refs)

    test_pairs = []
    lr_size = spec.view_size // spec.scale
    for pose, img in generate_views(vol, lut, spec, mode="test"):
        hr = imgio.quantize16(img)
        lr = imgio.quantize16(bicubic_resample(hr, lr_size, lr_size))
        test_pairs.append(SamplePair(hr=hr, lr=lr, theta_x=pose.theta_x,
                                     theta_y=pose.theta_y, patch_index=-1))
    write_dataset(test_pairs, out_dir / "test")
    return len(train_pairs), len(test_pairs)
