import math

import numpy as np
import pytest

from blade.image import (
    Footprint,
    add_awgn,
    bayer_mosaic,
    bilinear_demosaic,
    downsample_2x,
    extract_patch,
    luma,
    mssim,
    psnr,
    upsample_2x,
)


class TestFootprint:
    def test_offsets_row_major(self):
        fp = Footprint(3)
        expected = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)]
        assert [tuple(o) for o in fp.offsets()] == expected
        assert fp.size == 9
        assert fp.radius == 1

    @pytest.mark.parametrize("side", [0, 2, 4, -3])
    def test_rejects_even_or_nonpositive(self, side):
        with pytest.raises(ValueError):
            Footprint(side)


class TestExtractPatch:
    def test_constant_image(self):
        img = np.full((5, 6), 7.0, np.float32)
        patch = extract_patch(img, (2, 3), Footprint(3))
        assert np.array_equal(patch, np.full(9, 7.0, np.float32))

    def test_degenerate_reflection_1x1(self):
        img = np.array([[5.0]], np.float32)
        patch = extract_patch(img, (0, 0), Footprint(3))
        assert np.array_equal(patch, np.full(9, 5.0, np.float32))

    def test_interior_read_row_major(self):
        img = np.arange(9, dtype=np.float32).reshape(3, 3)
        patch = extract_patch(img, (1, 1), Footprint(3))
        assert np.array_equal(patch, np.arange(9, dtype=np.float32))

    def test_interior_equals_direct_indexing_exhaustive(self, rng):
        img = rng.uniform(0, 255, (5, 7)).astype(np.float32)
        for side in (1, 3):
            fp = Footprint(side)
            r = fp.radius
            for cy in range(r, 5 - r):
                for cx in range(r, 7 - r):
                    direct = img[cy - r : cy + r + 1, cx - r : cx + r + 1].ravel()
                    assert np.array_equal(extract_patch(img, (cy, cx), fp), direct)

    def test_reflection_no_edge_repeat(self):
        img = np.array([[1.0, 2.0, 3.0]], np.float32)
        patch = extract_patch(img, (0, 0), Footprint(3))
        # Row of the patch at the left edge mirrors: 2 1 | 1 2 3 -> taps (2, 1, 2)
        assert np.array_equal(patch.reshape(3, 3)[1], np.array([2.0, 1.0, 2.0], np.float32))

    def test_center_outside_raises(self):
        img = np.zeros((4, 4), np.float32)
        with pytest.raises(ValueError):
            extract_patch(img, (4, 0), Footprint(3))
        with pytest.raises(ValueError):
            extract_patch(img, (0, -1), Footprint(3))


class TestPsnr:
    def test_identical_is_infinite(self, random_image):
        assert psnr(random_image, random_image) == math.inf

    def test_known_mse(self):
        # MSE of exactly 43.6 -> 10*log10(255^2 / 43.6) = 31.7367 dB
        a = np.zeros((10, 10), np.float64)
        b = np.full((10, 10), math.sqrt(43.6), np.float64)
        assert psnr(a, b) == pytest.approx(31.7367, abs=0.01)

    def test_maximal_error_is_zero_db(self):
        a = np.zeros((4, 4), np.float32)
        b = np.full((4, 4), 255.0, np.float32)
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self, rng):
        a = rng.uniform(0, 255, (8, 8))
        b = rng.uniform(0, 255, (8, 8))
        assert psnr(a, b) == psnr(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def _ssim_oracle(a, b):
    """Per-window SSIM with explicit loops and weights (independent path)."""
    side, sigma = 11, 1.5
    half = side // 2
    ax = np.arange(side) - half
    g1 = np.exp(-(ax**2) / (2 * sigma**2))
    g1 /= g1.sum()
    window = np.outer(g1, g1)
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    h, w = a.shape
    vals = []
    for y in range(h - side + 1):
        for x in range(w - side + 1):
            pa = a[y : y + side, x : x + side].astype(np.float64)
            pb = b[y : y + side, x : x + side].astype(np.float64)
            mu_a = (window * pa).sum()
            mu_b = (window * pb).sum()
            va = (window * pa * pa).sum() - mu_a**2
            vb = (window * pb * pb).sum() - mu_b**2
            cov = (window * pa * pb).sum() - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


class TestMssim:
    def test_identity_is_exactly_one(self, rng):
        img = rng.uniform(0, 255, (16, 16)).astype(np.float32)
        assert mssim(img, img) == 1.0

    def test_constant_pair(self):
        img = np.full((12, 12), 100.0, np.float32)
        assert mssim(img, img.copy()) == 1.0

    def test_matches_bruteforce_oracle(self, rng):
        a = rng.uniform(0, 255, (32, 32)).astype(np.float32)
        b = np.clip(a + rng.normal(0, 12, (32, 32)), 0, 255).astype(np.float32)
        assert mssim(a, b) == pytest.approx(_ssim_oracle(a, b), abs=1e-6)

    def test_too_small_raises(self):
        with pytest.raises(ValueError):
            mssim(np.zeros((10, 12)), np.zeros((10, 12)))

    def test_mismatch_raises(self):
        with pytest.raises(ValueError):
            mssim(np.zeros((12, 12)), np.zeros((12, 13)))


class TestAwgn:
    def test_sigma_zero_is_identity(self, random_image):
        assert np.array_equal(add_awgn(random_image, 0.0, seed=3), random_image)

    def test_variance_large_sample(self):
        img = np.full((1024, 1024), 100.0, np.float32)
        noisy = add_awgn(img, 20.0, seed=5)
        var = float(np.var(noisy.astype(np.float64) - 100.0))
        assert abs(var - 400.0) / 400.0 < 0.05

    def test_deterministic(self, random_image):
        a = add_awgn(random_image, 15.0, seed=42)
        b = add_awgn(random_image, 15.0, seed=42)
        assert np.array_equal(a, b)
        c = add_awgn(random_image, 15.0, seed=43)
        assert not np.array_equal(a, c)

    def test_negative_sigma_rejected(self, random_image):
        with pytest.raises(ValueError):
            add_awgn(random_image, -1.0, seed=0)


class TestResampling:
    def test_constants_exact(self):
        img = np.full((9, 7), 42.0, np.float32)
        down = downsample_2x(img)
        assert np.array_equal(down, np.full((5, 4), 42.0, np.float32))
        up = upsample_2x(down, (9, 7))
        assert np.array_equal(up, img)

    def test_shapes(self):
        assert downsample_2x(np.zeros((4, 4), np.float32)).shape == (2, 2)
        assert downsample_2x(np.zeros((5, 8), np.float32)).shape == (3, 4)
        assert upsample_2x(np.zeros((3, 4), np.float32), (5, 8)).shape == (5, 8)

    def test_noise_reduction_about_half(self):
        # Bicubic 2x downsampling should roughly halve white-noise sigma.
        stds = []
        for seed in range(10):
            noise = add_awgn(np.zeros((256, 256), np.float32), 20.0, seed)
            stds.append(float(np.std(downsample_2x(noise).astype(np.float64))))
        mean_std = float(np.mean(stds))
        assert 8.0 <= mean_std <= 12.0

    def test_upsample_reproduces_smooth_ramp(self):
        yy, xx = np.mgrid[0:6, 0:8].astype(np.float32)
        ramp = 3.0 * xx + 2.0 * yy + 10.0
        up = upsample_2x(ramp, (12, 16))
        # Cubic interpolation is exact on affine signals away from borders.
        yy2, xx2 = np.mgrid[0:12, 0:16].astype(np.float64)
        expect = 3.0 * ((xx2 + 0.5) / 2 - 0.5) + 2.0 * ((yy2 + 0.5) / 2 - 0.5) + 10.0
        assert np.allclose(up[3:-3, 3:-3], expect[3:-3, 3:-3], atol=1e-4)


class TestBayer:
    def test_constant_gray_roundtrip(self):
        rgb = np.full((6, 8, 3), 77.0, np.float32)
        mosaic = bayer_mosaic(rgb)
        assert np.array_equal(mosaic, np.full((6, 8), 77.0, np.float32))
        rec = bilinear_demosaic(mosaic)
        assert np.array_equal(rec, rgb)

    def test_pure_red_masking(self):
        rgb = np.zeros((4, 4, 3), np.float32)
        rgb[..., 0] = 50.0
        mosaic = bayer_mosaic(rgb)
        expect = np.zeros((4, 4), np.float32)
        expect[0::2, 0::2] = 50.0
        assert np.array_equal(mosaic, expect)

    def test_ramp_recovered_in_interior(self):
        yy, xx = np.mgrid[0:8, 0:10].astype(np.float32)
        ramp = 5.0 * xx + 20.0
        rgb = np.stack([ramp, ramp, ramp], axis=-1)
        rec = bilinear_demosaic(bayer_mosaic(rgb))
        assert np.allclose(rec[1:-1, 1:-1], rgb[1:-1, 1:-1], atol=1e-4)

    def test_demosaic_preserves_observed_samples(self, rng):
        mosaic = rng.uniform(0, 255, (8, 8)).astype(np.float32)
        rec = bilinear_demosaic(mosaic)
        assert np.array_equal(bayer_mosaic(rec), mosaic)

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError):
            bayer_mosaic(np.zeros((5, 4, 3), np.float32))
        with pytest.raises(ValueError):
            bilinear_demosaic(np.zeros((4, 5), np.float32))


def test_luma_rec601_weights():
    rgb = np.zeros((2, 2, 3), np.float32)
    rgb[..., 0], rgb[..., 1], rgb[..., 2] = 100.0, 200.0, 50.0
    assert luma(rgb) == pytest.approx(np.full((2, 2), 0.299 * 100 + 0.587 * 200 + 0.114 * 50), abs=1e-4)
