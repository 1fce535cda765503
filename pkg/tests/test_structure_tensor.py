import math

import numpy as np
import pytest

from blade.structure_tensor import (
    TensorField,
    diagonal_gradient,
    half_shift_gaussian,
    smooth_tensor,
    tensor_eigen,
    tensor_features,
    tensor_field,
)

SQRT2 = math.sqrt(2.0)


def _ramp(alpha, beta, gamma, h=7, w=9):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return (alpha + beta * xx + gamma * yy).astype(np.float32)


class TestDiagonalGradient:
    def test_constant_image(self):
        g1, g2 = diagonal_gradient(np.full((5, 5), 9.0, np.float32))
        assert not g1.any() and not g2.any()
        assert g1.shape == (4, 4)

    def test_horizontal_ramp(self):
        g1, g2 = diagonal_gradient(_ramp(0, 1, 0))
        assert np.allclose(g1, 1 / SQRT2, atol=1e-12)
        assert np.allclose(g2, 1 / SQRT2, atol=1e-12)

    def test_vertical_ramp(self):
        g1, g2 = diagonal_gradient(_ramp(0, 0, 1))
        assert np.allclose(g1, -1 / SQRT2, atol=1e-12)
        assert np.allclose(g2, 1 / SQRT2, atol=1e-12)

    def test_affine_images_closed_form(self):
        # Diagonal differences are exact on affine signals.
        for alpha, beta, gamma in [(10, 2, -3), (0, -1.5, 0.25), (100, 0.125, 8)]:
            g1, g2 = diagonal_gradient(_ramp(alpha, beta, gamma))
            assert np.allclose(g1, (beta - gamma) / SQRT2, atol=1e-9)
            assert np.allclose(g2, (beta + gamma) / SQRT2, atol=1e-9)

    def test_too_small_raises(self):
        with pytest.raises(ValueError):
            diagonal_gradient(np.zeros((1, 5), np.float32))


class TestSmoothTensor:
    def test_constant_gradient_field(self):
        g1 = np.full((6, 6), 2.0)
        g2 = np.full((6, 6), -1.0)
        field = smooth_tensor((g1, g2), rho=1.3)
        assert field.a.shape == (7, 7)
        assert np.allclose(field.a, 4.0, atol=1e-12)
        assert np.allclose(field.b, -2.0, atol=1e-12)
        assert np.allclose(field.c, 1.0, atol=1e-12)

    @pytest.mark.parametrize("pos", [(5, 5), (4, 4), (4, 5)])
    def test_mass_preserved(self, pos):
        # Interior sample: the kernel support stays inside the field, so
        # normalization alone fixes the total mass.
        g1 = np.zeros((10, 10))
        g1[pos] = 1.7
        g2 = np.zeros((10, 10))
        field = smooth_tensor((g1, g2), rho=1.2)
        assert field.a.sum() == pytest.approx(1.7**2, abs=1e-9)

    def test_larger_rho_smooths_more(self):
        rng = np.random.default_rng(0)
        edge = np.tile((np.arange(32) > 16).astype(np.float32) * 120, (32, 1))
        noisy = (edge + rng.normal(0, 15, (32, 32))).astype(np.float32)
        grad = diagonal_gradient(noisy)
        var_small = float(np.var(smooth_tensor(grad, 0.5).b))
        var_large = float(np.var(smooth_tensor(grad, 3.0).b))
        assert var_large < var_small

    def test_kernel_taps(self):
        taps = half_shift_gaussian(1.2)
        assert len(taps) == 4  # ceil(3 * 1.2)
        assert 2.0 * taps.sum() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            half_shift_gaussian(0.0)

    def test_rank_one_before_smoothing(self, rng):
        img = rng.uniform(0, 255, (12, 12)).astype(np.float32)
        g1, g2 = diagonal_gradient(img)
        a, b, c = g1 * g1, g1 * g2, g2 * g2
        assert np.allclose(a * c, b * b, rtol=1e-14, atol=1e-20)


class TestEigen:
    def test_zero_tensor_convention(self):
        feats = tensor_features(TensorField(np.float64(0), np.float64(0), np.float64(0)))
        assert feats.orientation == 0.0
        assert feats.strength == 0.0
        assert feats.coherence == 0.0

    def test_hand_decomposition_2_1_2(self):
        lam1, lam2, w1, w2 = tensor_eigen(2.0, 1.0, 2.0)
        assert (lam1, lam2) == (3.0, 1.0)
        assert (w1, w2) == (2.0, 2.0)
        feats = tensor_features(TensorField(np.float64(2), np.float64(1), np.float64(2)))
        assert feats.strength == pytest.approx(math.sqrt(3.0), abs=1e-12)
        assert feats.coherence == pytest.approx((math.sqrt(3) - 1) / (math.sqrt(3) + 1), abs=1e-12)
        # Dominant direction (1, 1) de-rotates to the horizontal axis.
        assert feats.orientation == pytest.approx(0.0, abs=1e-12)

    def test_fallback_branch_1_0_0(self):
        lam1, lam2, w1, w2 = tensor_eigen(1.0, 0.0, 0.0)
        assert (lam1, lam2) == (1.0, 0.0)
        assert (w1, w2) == (2.0, 0.0)
        feats = tensor_features(TensorField(np.float64(1), np.float64(0), np.float64(0)))
        assert feats.strength == 1.0
        assert feats.coherence == 1.0

    def _random_psd(self, n, rng):
        lam = rng.uniform(0, 50, (n, 2))
        theta = rng.uniform(0, np.pi, n)
        ct, st = np.cos(theta), np.sin(theta)
        l1 = np.maximum(lam[:, 0], lam[:, 1])
        l2 = np.minimum(lam[:, 0], lam[:, 1])
        a = l1 * ct * ct + l2 * st * st
        b = (l1 - l2) * ct * st
        c = l1 * st * st + l2 * ct * ct
        return a, b, c

    def test_against_bruteforce_eigensolver(self, rng):
        a, b, c = self._random_psd(10_000, rng)
        lam1, lam2, w1, w2 = tensor_eigen(a, b, c)
        mats = np.empty((a.size, 2, 2))
        mats[:, 0, 0], mats[:, 0, 1] = a, b
        mats[:, 1, 0], mats[:, 1, 1] = b, c
        ref = np.linalg.eigvalsh(mats)  # ascending
        scale = np.maximum(np.abs(ref[:, 1]), 1e-30)
        assert np.all(np.abs(lam1 - ref[:, 1]) <= 1e-9 * scale)
        assert np.all(np.abs(lam2 - ref[:, 0]) <= 1e-9 * np.maximum(scale, 1.0))
        # Trace is preserved exactly.
        assert np.array_equal(lam1 + lam2, a + c)
        # Returned vector is an eigenvector for lam1.
        norm = np.hypot(w1, w2)
        nonzero = norm > 0
        res_x = a * w1 + b * w2 - lam1 * w1
        res_y = b * w1 + c * w2 - lam1 * w2
        residual = np.hypot(res_x, res_y)[nonzero]
        bound = 1e-6 * (norm * np.maximum(np.abs(lam1), 1.0))[nonzero]
        assert np.all(residual <= bound)

    def test_coherence_range_and_extremes(self, rng):
        a, b, c = self._random_psd(2000, rng)
        feats = tensor_features(TensorField(a, b, c))
        assert np.all((feats.coherence >= 0) & (feats.coherence <= 1))
        # coherence == 1 exactly when lam2 == 0 < lam1
        rank1 = tensor_features(TensorField(np.array([4.0, 9.0]), np.zeros(2), np.zeros(2)))
        assert np.all(rank1.coherence == 1.0)
        full = tensor_features(TensorField(np.array([4.0]), np.array([0.0]), np.array([1.0])))
        assert np.all(full.coherence < 1.0)


class TestRotationEquivariance:
    def test_rot90_shifts_orientation_by_half_pi(self, rng):
        img = rng.uniform(0, 255, (20, 24)).astype(np.float32)
        f = tensor_features(tensor_field(img, 1.5))
        fr = tensor_features(tensor_field(np.ascontiguousarray(np.rot90(img)), 1.5))
        h, w = img.shape
        margin = 6
        for y in range(margin, h - margin):
            for x in range(margin, w - margin):
                oy, ox = w - 1 - x, y
                d = (fr.orientation[oy, ox] - f.orientation[y, x] - math.pi / 2) % math.pi
                assert min(d, math.pi - d) < 1e-6
                assert abs(fr.strength[oy, ox] - f.strength[y, x]) < 1e-6
                assert abs(fr.coherence[oy, ox] - f.coherence[y, x]) < 1e-6
