import math

import numpy as np
import pytest

from lrdenoise.errors import DimensionMismatchError
from lrdenoise.imgio import add_gaussian_noise
from lrdenoise.noise import (
    alpha_for,
    all_patch_sigma,
    combined_estimate,
    filtered_noise_std,
    geometric_residual_std,
    gradient_covariance,
    residual_std,
    weak_texture_sigma,
)
from lrdenoise.patches import PatchSpec

SPEC7 = PatchSpec(d=7, stride=1, m=1, window=7)


class TestResidualFormulas:
    def test_filtered_noise_rms(self):
        ref = np.array([[1.0, 2.0], [3.0, 4.0]])
        cur = np.zeros((2, 2))
        assert filtered_noise_std(ref, cur) == pytest.approx(
            math.sqrt(7.5), rel=1e-12
        )

    def test_filtered_noise_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            filtered_noise_std(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_residual_std_value(self):
        # sqrt(30^2 - 18^2) = 24, scaled by gamma
        assert residual_std(30.0, 18.0, 1.0) == pytest.approx(24.0, rel=1e-12)
        assert residual_std(30.0, 18.0, 0.6) == pytest.approx(14.4, rel=1e-12)

    def test_residual_std_clamps(self):
        assert residual_std(10.0, 20.0, 1.0) == 0.0

    def test_geometric_residual_value(self):
        assert geometric_residual_std(50.0, 30.0, 1.0) == pytest.approx(
            40.0, rel=1e-12
        )

    def test_combined_estimate(self):
        assert combined_estimate(10.0, 8.0, 0.8) == pytest.approx(9.6, rel=1e-12)
        with pytest.raises(ValueError):
            combined_estimate(10.0, 8.0, 1.5)

    def test_alpha_rule(self):
        assert alpha_for(10.0) == 0.9
        assert alpha_for(29.9) == 0.9
        assert alpha_for(30.0) == 0.8
        assert alpha_for(100.0) == 0.8


class TestGradientCovariance:
    def test_hand_computed(self):
        patch = np.array([[0.0, 1.0], [2.0, 3.0]])
        # gx = 1, gy = 2 on the single interior sample
        cov = gradient_covariance(patch)
        assert np.allclose(cov, [[1.0, 2.0], [2.0, 4.0]])

    def test_constant_patch_is_zero(self):
        assert np.allclose(gradient_covariance(np.full((5, 5), 3.0)), 0.0)

    def test_symmetric_psd(self):
        rng = np.random.default_rng(0)
        cov = gradient_covariance(rng.normal(size=(7, 7)))
        assert np.allclose(cov, cov.T)
        assert np.all(np.linalg.eigvalsh(cov) >= -1e-12)


class TestWeakTextureSigma:
    def test_pure_noise_accuracy(self):
        noisy = add_gaussian_noise(np.zeros((256, 256)), 30.0, seed=11)
        est = weak_texture_sigma(noisy, SPEC7, 0)
        assert abs(est - 30.0) / 30.0 < 0.05

    def test_constant_plus_noise_accuracy(self):
        noisy = add_gaussian_noise(np.full((256, 256), 128.0), 10.0, seed=12)
        est = weak_texture_sigma(noisy, SPEC7, 0)
        assert abs(est - 10.0) / 10.0 < 0.05

    def test_constant_image_estimates_zero(self):
        est = weak_texture_sigma(np.full((64, 64), 42.0), SPEC7, 0)
        assert est == 0.0

    def test_deterministic(self):
        noisy = add_gaussian_noise(np.zeros((128, 128)), 20.0, seed=3)
        a = weak_texture_sigma(noisy, SPEC7, 5)
        b = weak_texture_sigma(noisy, SPEC7, 5)
        assert a == b

    def test_structure_is_excluded(self):
        # strong deterministic texture on top of noise: the weak-texture
        # estimate must not blow up with the texture energy
        noisy = add_gaussian_noise(np.zeros((256, 256)), 20.0, seed=8)
        ramp = np.outer(np.arange(256), np.ones(256)) * 2.0
        textured = noisy + ramp
        est = weak_texture_sigma(textured, SPEC7, 0)
        assert abs(est - 20.0) / 20.0 < 0.15

    def test_too_few_patches_raises(self):
        with pytest.raises(ValueError):
            weak_texture_sigma(np.zeros((9, 9)), SPEC7, 0)


class TestAllPatchSigma:
    def test_matches_on_pure_noise(self):
        noisy = add_gaussian_noise(np.zeros((128, 128)), 25.0, seed=2)
        est = all_patch_sigma(noisy, 7)
        assert abs(est - 25.0) / 25.0 < 0.1
