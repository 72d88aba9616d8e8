import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrdenoise.errors import ConvergenceFailureError, LengthMismatchError
from lrdenoise.lowrank import (
    adjust_singulars,
    nnm_shrink,
    recompose,
    split_spectrum,
    svd,
    wnnm_shrink,
    wnnm_weights,
)


class TestSvd:
    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(0)
        for shape in [(36, 70), (70, 36), (16, 16), (9, 40)]:
            m = rng.normal(size=shape)
            f = svd(m)
            k = min(shape)
            assert f.sigma.shape == (k,)
            assert np.all(np.diff(f.sigma) <= 0)
            recon = (f.u * f.sigma) @ f.v.T
            assert np.linalg.norm(recon - m) <= 1e-9 * np.linalg.norm(m)
            assert np.max(np.abs(f.u.T @ f.u - np.eye(k))) <= 1e-10
            assert np.max(np.abs(f.v.T @ f.v - np.eye(k))) <= 1e-10

    def test_sign_convention(self):
        rng = np.random.default_rng(1)
        f = svd(rng.normal(size=(12, 8)))
        for col in f.u.T:
            nz = col[np.abs(col) > 0]
            assert nz[0] >= 0

    def test_rejects_nonfinite(self):
        bad = np.ones((4, 4))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            svd(bad)


class TestShrinkKernels:
    def test_nnm_shrink_values(self):
        out = nnm_shrink(np.array([5.0, 3.0, 1.0]), 2.0)
        assert np.array_equal(out, [3.0, 1.0, 0.0])

    def test_nnm_rejects_negative_threshold(self):
        with pytest.raises(ValueError):
            nnm_shrink(np.array([1.0]), -0.5)

    def test_adjust_singulars_value(self):
        # sqrt(10^2 - 4 * 3^2) = 8
        out = adjust_singulars(np.array([10.0]), 4, 3.0)
        assert out[0] == pytest.approx(8.0, rel=1e-12)

    def test_adjust_clamps_at_zero(self):
        out = adjust_singulars(np.array([1.0]), 100, 5.0)
        assert out[0] == 0.0

    def test_wnnm_weights_value(self):
        c = 2.0 * math.sqrt(2.0)
        out = wnnm_weights(np.array([100.0]), c, 70, 1e-16)
        expected = c * math.sqrt(70) / 100.0
        assert out[0] == pytest.approx(expected, rel=1e-12)
        assert out[0] == pytest.approx(0.2366431913239846, rel=1e-12)

    def test_wnnm_weights_guard_handles_zero(self):
        out = wnnm_weights(np.array([0.0]), 1.0, 4, 1e-16)
        assert np.isfinite(out[0]) and out[0] > 0

    def test_wnnm_shrink_values(self):
        out = wnnm_shrink(
            np.array([10.0, 5.0, 1.0]), np.array([0.2, 0.4, 2.0])
        )
        assert np.allclose(out, [9.8, 4.6, 0.0], rtol=0, atol=1e-15)

    def test_wnnm_shrink_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            wnnm_shrink(np.array([1.0, 2.0]), np.array([0.1]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 20))
    def test_shrunk_spectrum_stays_ordered(self, seed, n):
        # descending singular values with inverse-strength weights keep
        # their order after shrinkage
        rng = np.random.default_rng(seed)
        sigma = np.sort(rng.uniform(0, 100, size=n))[::-1].copy()
        adjusted = adjust_singulars(sigma, 16, 5.0)
        weights = wnnm_weights(adjusted, 3.0, 16, 1e-16)
        shrunk = wnnm_shrink(sigma, weights)
        assert np.all(shrunk >= 0)
        assert np.all(shrunk <= sigma)
        assert np.all(np.diff(shrunk) <= 1e-12)


class TestSplit:
    def test_split_values(self):
        high, low = split_spectrum(np.array([4.0, 0.4, 0.0]), 0.5)
        assert np.array_equal(high, [4.0, 0.0, 0.0])
        assert np.array_equal(low, [0.0, 0.4, 0.0])

    def test_boundary_goes_low(self):
        high, low = split_spectrum(np.array([0.5]), 0.5)
        assert high[0] == 0.0 and low[0] == 0.5

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 30))
    def test_partition_identity_exact(self, seed, n):
        rng = np.random.default_rng(seed)
        values = rng.uniform(0, 3, size=n)
        tau = rng.uniform(0, 3)
        high, low = split_spectrum(values, tau)
        assert np.array_equal(high + low, values)
        assert np.all((high == 0) | (high > tau))
        assert np.all((low == 0) | (low <= tau))


class TestRecompose:
    def test_roundtrip(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(16, 30))
        f = svd(m)
        back = recompose(f, f.sigma)
        assert np.linalg.norm(back - m) <= 1e-9 * np.linalg.norm(m)

    def test_zeroed_values_give_zero(self):
        f = svd(np.random.default_rng(3).normal(size=(9, 9)))
        assert np.allclose(recompose(f, np.zeros(9)), 0.0)

    def test_length_mismatch(self):
        f = svd(np.random.default_rng(4).normal(size=(9, 9)))
        with pytest.raises(LengthMismatchError):
            recompose(f, np.zeros(5))
