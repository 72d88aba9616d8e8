import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lrdenoise.errors import ImageTooSmallError
from lrdenoise.estimator import PatchDenoiser, estimate_sigma, validate_image
from lrdenoise.imgio import add_gaussian_noise, psnr


class TestValidateImage:
    def test_accepts_lists(self):
        out = validate_image([[1, 2], [3, 4]])
        assert out.dtype == np.float64
        assert out.shape == (2, 2)

    def test_rejects_one_dimensional(self):
        with pytest.raises(ValueError):
            validate_image(np.zeros(9))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            validate_image(np.full((4, 4), np.nan))

    def test_rejects_tiny(self):
        with pytest.raises(ImageTooSmallError):
            validate_image(np.zeros((1, 8)), min_side=2)


class TestEstimateSigma:
    def test_recovers_noise_level(self):
        noisy = add_gaussian_noise(np.full((128, 128), 90.0), 25.0, seed=6)
        weak, every = estimate_sigma(noisy)
        assert abs(weak - 25.0) / 25.0 < 0.1
        assert abs(every - 25.0) / 25.0 < 0.1


class TestPatchDenoiser:
    def test_get_params_roundtrip_and_clone(self):
        den = PatchDenoiser(sigma=30.0, mode="wnnm", iterations=4)
        params = den.get_params()
        assert params["sigma"] == 30.0
        assert params["mode"] == "wnnm"
        twin = clone(den)
        assert twin.get_params() == params
        den.set_params(tau=0.9)
        assert den.tau == 0.9

    def test_fit_resolves_band_config(self):
        den = PatchDenoiser(sigma=50.0).fit(np.zeros((32, 32)))
        assert den.sigma_ == 50.0
        assert den.config_.patch.d == 8
        assert den.config_.patch.m == 120
        assert den.config_.iterations == 14

    def test_fit_honors_overrides(self):
        den = PatchDenoiser(
            sigma=50.0, patch_size=5, stride=2, group_size=16, window=20,
            iterations=3, seed=9,
        ).fit(np.zeros((32, 32)))
        patch = den.config_.patch
        assert (patch.d, patch.stride, patch.m, patch.window) == (5, 2, 16, 20)
        assert den.config_.iterations == 3
        assert den.config_.seed == 9

    def test_large_patch_widens_window(self):
        den = PatchDenoiser(sigma=10.0, patch_size=40).fit(np.zeros((64, 64)))
        assert den.config_.patch.window >= 40

    def test_blind_fit_estimates_sigma(self):
        noisy = add_gaussian_noise(np.full((128, 128), 100.0), 30.0, seed=4)
        den = PatchDenoiser().fit(noisy)
        assert abs(den.sigma_ - 30.0) / 30.0 < 0.1
        assert den.config_.patch.d == 7

    def test_blind_fit_on_constant_raises(self):
        with pytest.raises(ValueError):
            PatchDenoiser().fit(np.full((64, 64), 5.0))

    def test_transform_requires_fit(self):
        with pytest.raises(NotFittedError):
            PatchDenoiser(sigma=20.0).transform(np.zeros((32, 32)))

    def test_fit_transform_denoises(self, small_clean):
        noisy = add_gaussian_noise(small_clean, 20.0, seed=5)
        den = PatchDenoiser(
            sigma=20.0, mode="wnnm", patch_size=4, group_size=8, window=12,
            iterations=3,
        )
        out = den.fit_transform(noisy)
        assert out.shape == noisy.shape
        assert psnr(small_clean, out) > psnr(small_clean, noisy)
        assert len(den.trace_) == 2

    def test_predict_matches_transform(self, small_clean):
        noisy = add_gaussian_noise(small_clean, 20.0, seed=5)
        den = PatchDenoiser(
            sigma=20.0, mode="wnnm", patch_size=4, group_size=8, window=12,
            iterations=3,
        ).fit(noisy)
        assert den.predict(noisy).tobytes() == den.transform(noisy).tobytes()
