from pathlib import Path

import numpy as np
import pytest

from xsr import imgio
from xsr.dataset import (PATCH_OFFSETS, DatasetError, DatasetSpec, SamplePair,
                         build_dataset, crop_patches, generate_reference,
                         generate_views, make_pairs, read_dataset,
                         write_dataset)
from xsr.drr import ViewPose, render
from xsr.sr.bicubic import bicubic_resample
from xsr.volume import CtVolume


@pytest.fixture(scope="module")
def tiny_volume():
    rng = np.random.default_rng(0)
    hu = rng.integers(-1000, 1500, size=(24, 24, 24)).astype(np.int16)
    return CtVolume(hu, (1.0, 1.0, 1.0))


class TestGenerateViews:
    def test_train_grid_count(self, tiny_volume, lut):
        spec = DatasetSpec(grid_n=3, view_size=64)
        views = generate_views(tiny_volume, lut, spec, mode="train")
        assert len(views) == 9
        angles = {(v[0].theta_x, v[0].theta_y) for v in views}
        assert (0.0, 0.0) in angles and (48.0, 48.0) in angles

    def test_single_view_grid(self, tiny_volume, lut):
        spec = DatasetSpec(grid_n=1, view_size=64)
        views = generate_views(tiny_volume, lut, spec, mode="train")
        assert len(views) == 1
        assert (views[0][0].theta_x, views[0][0].theta_y) == (0.0, 0.0)

    def test_test_poses_deterministic(self, tiny_volume, lut):
        spec = DatasetSpec(seed=42, n_test=5, view_size=64)
        a = generate_views(tiny_volume, lut, spec, mode="test")
        b = generate_views(tiny_volume, lut, spec, mode="test")
        assert [(v[0].theta_x, v[0].theta_y) for v in a] == \
               [(v[0].theta_x, v[0].theta_y) for v in b]

    def test_test_poses_on_lattice_without_replacement(self, tiny_volume, lut):
        spec = DatasetSpec(seed=3, n_test=8, test_step_deg=20.0, view_size=64)
        views = generate_views(tiny_volume, lut, spec, mode="test")
        poses = [(v[0].theta_x, v[0].theta_y) for v in views]
        assert len(set(poses)) == 8
        for tx, ty in poses:
            assert tx % 20.0 == 0.0 and ty % 20.0 == 0.0
            assert 0 <= tx < 360 and 0 <= ty < 360

    def test_bad_mode_rejected(self, tiny_volume, lut):
        with pytest.raises(ValueError):
            generate_views(tiny_volume, lut, DatasetSpec(), mode="dev")


class TestCropPatches:
    def test_constant_image(self):
        patches = crop_patches(np.full((512, 512), 0.25))
        assert len(patches) == 5
        assert all(p.shape == (160, 160) and np.all(p == 0.25) for p in patches)

    def test_offsets_match_table(self):
        img = (np.arange(512)[:, None] * 512.0 + np.arange(512)[None, :]) / 512 ** 2
        for patch, (r, c) in zip(crop_patches(img), PATCH_OFFSETS):
            assert patch[0, 0] == img[r, c]
            assert patch[-1, -1] == img[r + 159, c + 159]

    def test_undersized_rejected(self):
        with pytest.raises(ValueError):
            crop_patches(np.zeros((511, 512)))


class TestMakePairs:
    def test_constant_patch_gives_constant_lr(self):
        value = imgio.quantize16(np.full((160, 160), 0.5))[0, 0]
        pairs = make_pairs([np.full((160, 160), 0.5)])
        assert pairs[0].lr.shape == (40, 40)
        assert np.allclose(pairs[0].lr, value, atol=1e-4)

    def test_pair_count(self):
        rng = np.random.default_rng(1)
        pairs = make_pairs([rng.random((160, 160)) for _ in range(5)])
        assert len(pairs) == 5

    def test_lr_regenerable_from_hr(self):
        rng = np.random.default_rng(2)
        pairs = make_pairs([rng.random((160, 160))])
        regen = imgio.quantize16(bicubic_resample(pairs[0].hr, 40, 40))
        assert np.array_equal(regen, pairs[0].lr)


class TestReference:
    def test_zero_offset_reproduces_view(self, tiny_volume, lut):
        class ZeroRng:
            def uniform(self, lo, hi, size=None):
                return np.zeros(size)

        pose = ViewPose(10.0, 20.0, 64, 64, 1.0)
        base = render(tiny_volume, lut, pose)
        ref = generate_reference(tiny_volume, lut, pose, DatasetSpec(), ZeroRng())
        assert np.array_equal(ref, base)

    def test_same_seed_same_reference(self, tiny_volume, lut):
        pose = ViewPose(0.0, 0.0, 64, 64, 1.0)
        a = generate_reference(tiny_volume, lut, pose, DatasetSpec(),
                               np.random.default_rng(5))
        b = generate_reference(tiny_volume, lut, pose, DatasetSpec(),
                               np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_offsets_stay_in_range(self):
        # the draw used by generate_reference, checked in bulk
        rng = np.random.default_rng(6)
        draws = rng.uniform(-45.0, 45.0, size=(10_000, 2))
        assert draws.min() >= -45.0 and draws.max() <= 45.0


class TestRoundTrip:
    def test_empty_dataset(self, tmp_path):
        write_dataset([], tmp_path / "empty")
        manifest = (tmp_path / "empty" / "manifest.tsv").read_text().splitlines()
        assert len(manifest) == 1  # header only
        assert read_dataset(tmp_path / "empty") == []

    def test_bitwise_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        pairs = make_pairs([rng.random((160, 160)) for _ in range(10)],
                           series="s1", theta_x=24.0, theta_y=48.0)
        write_dataset(pairs, tmp_path / "ds")
        back = read_dataset(tmp_path / "ds")
        assert len(back) == 10
        for a, b in zip(pairs, back):
            assert np.array_equal(a.hr, b.hr)
            assert np.array_equal(a.lr, b.lr)
            assert (a.series, a.theta_x, a.theta_y, a.patch_index) == \
                   (b.series, b.theta_x, b.theta_y, b.patch_index)

    def test_manifest_mismatch_detected(self, tmp_path):
        rng = np.random.default_rng(4)
        pairs = make_pairs([rng.random((160, 160)) for _ in range(3)])
        write_dataset(pairs, tmp_path / "ds")
        manifest = tmp_path / "ds" / "manifest.tsv"
        lines = manifest.read_text().splitlines()
        manifest.write_text("\n".join(lines[:-1]) + "\n")  # drop one row
        with pytest.raises(DatasetError, match="manifest lists"):
            read_dataset(tmp_path / "ds")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError):
            read_dataset(tmp_path)


class TestBuildDataset:
    def test_counts_and_determinism(self, tiny_volume, lut, tmp_path):
        spec = DatasetSpec(grid_n=2, seed=1, n_test=2)
        n1 = build_dataset(tiny_volume, lut, spec, tmp_path / "a")
        n2 = build_dataset(tiny_volume, lut, spec, tmp_path / "b")
        assert n1 == n2 == (20, 2)
        for rel in sorted(p.relative_to(tmp_path / "a")
                          for p in (tmp_path / "a").rglob("*") if p.is_file()):
            assert (tmp_path / "a" / rel).read_bytes() == \
                   (tmp_path / "b" / rel).read_bytes(), rel

    def test_train_pairs_satisfy_regeneration_invariant(self, tiny_volume, lut, tmp_path):
        spec = DatasetSpec(grid_n=1, seed=2, n_test=1)
        build_dataset(tiny_volume, lut, spec, tmp_path / "ds")
        for pair in read_dataset(tmp_path / "ds" / "train"):
            regen = imgio.quantize16(bicubic_resample(pair.hr, 40, 40))
            assert np.array_equal(regen, pair.lr)

    def test_refs_written_when_requested(self, tiny_volume, lut, tmp_path):
        spec = DatasetSpec(grid_n=1, seed=3, n_test=1)
        build_dataset(tiny_volume, lut, spec, tmp_path / "ds", with_refs=True)
        refs = sorted((tmp_path / "ds" / "train" / "ref").glob("*.pgm"))
        assert len(refs) == 5
