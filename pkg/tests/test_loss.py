import numpy as np
import pytest

from xsr.loss import (LossReport, LossWeights, fd_loss, fd_loss_grad, rec_loss,
                      total_loss)

from .oracles import away_from_sign_boundaries, central_diff_grad, rel_err


def random_pair(rng, h=6, w=6):
    return rng.random((h, w)), rng.random((h, w))


class TestRecLoss:
    def test_identical_is_zero(self):
        img = np.random.default_rng(0).random((5, 5))
        assert rec_loss(img, img) == 0.0

    def test_constant_offset(self):
        hr = np.full((4, 4), 0.5)
        sr = np.full((4, 4), 0.7)
        assert rec_loss(sr, hr) == pytest.approx(0.2)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(1)
        sr, hr = random_pair(rng, 4, 4)
        expect = sum(abs(sr[i, j] - hr[i, j]) for i in range(4) for j in range(4)) / 16
        assert rec_loss(sr, hr) == pytest.approx(expect, rel=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            rec_loss(np.zeros((4, 4)), np.zeros((4, 5)))


class TestFdLoss:
    def test_identical_is_zero(self):
        img = np.random.default_rng(2).random((8, 8))
        assert fd_loss(img, img) == 0.0

    def test_constant_offset_hits_only_dc(self):
        # sr = hr + c: spectra differ only at DC by c*H*W, so loss = c
        rng = np.random.default_rng(3)
        hr = rng.random((8, 8)) * 0.5
        c = 0.25
        assert fd_loss(hr + c, hr) == pytest.approx(c, rel=1e-12)

    def test_single_pixel_delta_closed_form(self):
        # +c at pixel (0,0) shifts every stored coefficient by c (real part):
        # loss = c * H*(W/2+1)/(H*W) = 5c/8 for 8x8
        rng = np.random.default_rng(4)
        hr = rng.random((8, 8)) * 0.5
        sr = hr.copy()
        c = 0.125
        sr[0, 0] += c
        assert fd_loss(sr, hr) == pytest.approx(5.0 * c / 8.0, rel=1e-12)

    def test_symmetric_nonnegative_zero_iff_equal(self):
        rng = np.random.default_rng(5)
        sr, hr = random_pair(rng)
        assert fd_loss(sr, hr) == pytest.approx(fd_loss(hr, sr), rel=1e-14)
        assert fd_loss(sr, hr) > 0
        assert fd_loss(hr, hr) == 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(6)
        sr, hr = random_pair(rng)
        shift = rng.random((6, 6))
        a = fd_loss(sr, hr)
        b = fd_loss(sr + shift, hr + shift)
        assert a == pytest.approx(b, rel=1e-10)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            x, y = random_pair(rng)
            z = rng.random((6, 6))
            assert fd_loss(x, z) <= fd_loss(x, y) + fd_loss(y, z) + 1e-12


class TestFdLossGrad:
    def test_identical_images_zero_gradient(self):
        img = np.random.default_rng(8).random((8, 8))
        assert np.all(fd_loss_grad(img, img) == 0.0)

    def test_constant_offset_gradient_matches_fd(self):
        rng = np.random.default_rng(9)
        hr = rng.random((8, 8)) * 0.5
        sr = hr + 0.25
        g = fd_loss_grad(sr, hr)
        num = central_diff_grad(lambda s: fd_loss(s, hr), sr.copy())
        assert rel_err(g, num) < 1e-4

    def test_random_pair_full_fd_sweep(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            sr, hr = random_pair(rng)
            while not away_from_sign_boundaries(sr, hr):
                sr, hr = random_pair(rng)
            g = fd_loss_grad(sr, hr)
            num = central_diff_grad(lambda s: fd_loss(s, hr), sr.copy())
            assert rel_err(g, num) < 1e-4

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fd_loss_grad(np.zeros((4, 4)), np.zeros((5, 4)))


class TestTotalLoss:
    def test_identical_images(self):
        img = np.random.default_rng(11).random((6, 6))
        rep = total_loss(img, img, LossWeights())
        assert rep.total == 0.0

    def test_weighted_sum(self):
        rng = np.random.default_rng(12)
        sr, hr = random_pair(rng)
        w = LossWeights(lambda_rec=1.0, lambda_fd=0.01)
        rep = total_loss(sr, hr, w)
        assert rep.total == pytest.approx(rep.rec + 0.01 * rep.fd, rel=1e-15)
        assert rep.rec >= 0 and rep.fd >= 0

    def test_fixed_numbers(self):
        # rec 0.2, fd 0.5 under (1.0, 0.01) -> 0.205
        assert 1.0 * 0.2 + 0.01 * 0.5 == pytest.approx(0.205)

    def test_rec_only_configuration(self):
        rng = np.random.default_rng(13)
        sr, hr = random_pair(rng)
        rep = total_loss(sr, hr, LossWeights(lambda_rec=1.0, lambda_fd=0.0))
        assert rep.total == rec_loss(sr, hr)

    def test_reserved_weights_must_stay_zero(self):
        with pytest.raises(ValueError):
            LossWeights(lambda_adv=0.5)
        with pytest.raises(ValueError):
            LossWeights(lambda_rec=-1.0)
