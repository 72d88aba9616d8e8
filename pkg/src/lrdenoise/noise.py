"""Noise level tracking: residual estimates and the weak-texture PCA estimator."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .patches import patch_stack

logger = logging.getLogger(__name__)

# Monte Carlo texture thresholds for unit-variance noise, keyed by (d, seed).
# Eigenvalues scale with the squared noise level, so one calibration per
# patch size serves every sigma.
_CALIBRATION_CACHE = {}
_CALIBRATION_PATCHES = 2000
_CALIBRATION_QUANTILE = 99.0


@dataclass
class NoiseState:
    """Noise bookkeeping for one denoising round."""

    sigma_n: float
    sigma_flt: float
    sigma_res: float
    sigma_geom: float
    sigma_res_geom: float
    sigma_hat: float
    gamma: float
    alpha: float


def filtered_noise_std(reference, current):
    """Root mean square difference between two images of equal shape."""
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(current, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def residual_std(sigma_n, sigma_flt, gamma):
    """Residual noise level after removing the filtered-away part."""
    if sigma_n < 0 or sigma_flt < 0:
        raise ValueError("noise levels must be non-negative")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma * float(np.sqrt(max(sigma_n * sigma_n - sigma_flt * sigma_flt, 0.0)))


def geometric_residual_std(sigma_n, sigma_geom, gamma):
    """Residual noise level anchored on the geometry-based estimate."""
    if sigma_n < 0 or sigma_geom < 0:
        raise ValueError("noise levels must be non-negative")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma * float(np.sqrt(max(sigma_n * sigma_n - sigma_geom * sigma_geom, 0.0)))


def combined_estimate(sigma_res, sigma_res_geom, alpha):
    """Convex mix of the two residual estimates."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * sigma_res + (1.0 - alpha) * sigma_res_geom


def alpha_for(sigma_n):
    """Mixing weight as a function of the nominal noise level."""
    return 0.9 if sigma_n < 30 else 0.8


def gradient_covariance(patch):
    """2x2 covariance of forward-difference gradients over one patch.

    Both differences are sampled on the (d-1)x(d-1) interior so they
    share their base pixel.
    """
    p = np.asarray(patch, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 2 or p.shape[1] < 2:
        raise ValueError(f"patch must be at least 2x2, got shape {p.shape}")
    gx = p[:-1, 1:] - p[:-1, :-1]
    gy = p[1:, :-1] - p[:-1, :-1]
    sxx = float(np.sum(gx * gx))
    syy = float(np.sum(gy * gy))
    sxy = float(np.sum(gx * gy))
    return np.array([[sxx, sxy], [sxy, syy]])


def _texture_scores(stack):
    """Largest gradient-covariance eigenvalue for every patch in an (N, d, d) stack."""
    gx = stack[:, :-1, 1:] - stack[:, :-1, :-1]
    gy = stack[:, 1:, :-1] - stack[:, :-1, :-1]
    sxx = np.sum(gx * gx, axis=(1, 2))
    syy = np.sum(gy * gy, axis=(1, 2))
    sxy = np.sum(gx * gy, axis=(1, 2))
    half_tr = 0.5 * (sxx + syy)
    return half_tr + np.sqrt((0.5 * (sxx - syy)) ** 2 + sxy * sxy)


def _unit_texture_threshold(d, seed):
    key = (d, int(seed))
    cached = _CALIBRATION_CACHE.get(key)
    if cached is None:
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, 1.0, (_CALIBRATION_PATCHES, d, d))
        cached = float(np.percentile(_texture_scores(noise), _CALIBRATION_QUANTILE))
        _CALIBRATION_CACHE[key] = cached
    return cached


def _pca_sigma(vectors):
    """Noise std from the smallest covariance eigenvalue of (N, p) patch vectors.

    The raw minimum eigenvalue of a sample covariance runs low by about
    (1 - sqrt(p/N))**2 even on pure noise, which is corrected here.
    """
    n, p = vectors.shape
    cov = np.cov(vectors, rowvar=False)
    smallest = float(np.linalg.eigvalsh(cov)[0])
    correction = (1.0 - np.sqrt(p / n)) ** 2
    return float(np.sqrt(max(smallest / correction, 0.0)))


def weak_texture_sigma(img, spec, seed):
    """Estimate the noise std of an image from its weak-texture patches.

    Starts from a PCA estimate over every patch (stride 2), then
    alternates between thresholding patches on gradient strength and
    re-estimating, until the estimate moves less than 1e-3 or ten
    rounds pass. The texture threshold at each round comes from a
    seeded Monte Carlo calibration against pure noise at the current
    estimate. A selection too small to support PCA falls back to the
    all-patch estimate with a warning.
    """
    img = np.asarray(img, dtype=np.float64)
    _, stack = patch_stack(img, spec.d, 2)
    n_total = stack.shape[0]
    if n_total < 50:
        raise ValueError(f"need at least 50 patches for estimation, got {n_total}")
    p = spec.d * spec.d
    vectors = stack.reshape(n_total, p)
    scores = _texture_scores(stack)
    unit_threshold = _unit_texture_threshold(spec.d, seed)

    sigma_all = _pca_sigma(vectors)
    sigma = sigma_all
    for _ in range(10):
        selected = scores <= sigma * sigma * unit_threshold
        n_selected = int(selected.sum())
        if n_selected < max(10, p + 1):
            logger.warning(
                "weak-texture selection kept only %d patches; using all-patch estimate",
                n_selected,
            )
            return sigma_all
        new_sigma = _pca_sigma(vectors[selected])
        done = abs(new_sigma - sigma) < 1e-3
        sigma = new_sigma
        if done:
            break
    return sigma


def all_patch_sigma(img, d):
    """Plain PCA noise estimate over every stride-2 patch, no selection."""
    img = np.asarray(img, dtype=np.float64)
    _, stack = patch_stack(img, d, 2)
    return _pca_sigma(stack.reshape(stack.shape[0], d * d))
