"""Singular value decomposition and spectrum shrinkage kernels.

All shrinkage operators take and return 1-D float64 arrays of singular
values ordered the way the decomposition produced them.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailureError, LengthMismatchError


class SvdFactors(NamedTuple):
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


@dataclass
class ShrinkOutcome:
    """Spectrum bookkeeping for one patch group."""

    sigma: np.ndarray
    adjusted: np.ndarray
    weights: np.ndarray
    shrunk: np.ndarray


def _as_spectrum(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def _fix_signs(u, v):
    # deterministic orientation: make the first nonzero entry of every
    # left singular vector non-negative, flipping u and v together so
    # the product is unchanged
    nonzero = u != 0.0
    first = np.argmax(nonzero, axis=0)
    lead = u[first, np.arange(u.shape[1])]
    flip = (lead < 0.0) & nonzero.any(axis=0)
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0


def svd(matrix):
    """Thin SVD with a deterministic sign convention.

    Returns SvdFactors(u, sigma, v) with u of shape (p, r), sigma
    non-increasing, v of shape (m, r), and matrix == u @ diag(sigma) @ v.T.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    try:
        u, sigma, vh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError("SVD did not converge") from exc
    u = np.ascontiguousarray(u)
    v = np.ascontiguousarray(vh.T)
    _fix_signs(u, v)
    return SvdFactors(u=u, sigma=sigma, v=v)


def nnm_shrink(sigma, theta):
    """Soft-threshold every singular value by the constant theta."""
    if theta < 0:
        raise ValueError(f"threshold must be non-negative, got {theta}")
    return np.maximum(_as_spectrum(sigma, "sigma") - theta, 0.0)


def adjust_singulars(sigma, m, sigma_res):
    """Estimate signal singular values from noisy ones.

    Subtracts the expected per-direction noise energy m * sigma_res**2
    from each squared singular value, flooring at zero.
    """
    if m < 1:
        raise ValueError(f"group size must be positive, got {m}")
    if sigma_res < 0:
        raise ValueError(f"noise level must be non-negative, got {sigma_res}")
    arr = _as_spectrum(sigma, "sigma")
    return np.sqrt(np.maximum(arr * arr - m * sigma_res * sigma_res, 0.0))


def wnnm_weights(adjusted, c, m, eps):
    """Per-index shrinkage weights, inversely proportional to signal strength."""
    if c <= 0:
        raise ValueError(f"weight constant must be positive, got {c}")
    if m < 1:
        raise ValueError(f"group size must be positive, got {m}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    arr = _as_spectrum(adjusted, "adjusted")
    return c * np.sqrt(m) / (arr + eps)


def wnnm_shrink(sigma, weights):
    """Soft-threshold each singular value by its own weight."""
    s = _as_spectrum(sigma, "sigma")
    w = _as_spectrum(weights, "weights")
    if s.shape != w.shape:
        raise LengthMismatchError(f"{s.shape[0]} singular values vs {w.shape[0]} weights")
    return np.maximum(s - w, 0.0)


def split_spectrum(shrunk, tau):
    """Partition a shrunk spectrum into (high, low) parts at threshold tau.

    Strictly-greater comparison: values equal to tau land in the low part.
    high + low reproduces the input exactly.
    """
    arr = _as_spectrum(shrunk, "shrunk")
    high = np.where(arr > tau, arr, 0.0)
    return high, arr - high


def recompose(factors, values):
    """Rebuild a matrix from SVD factors with replacement singular values."""
    vals = _as_spectrum(values, "values")
    if vals.shape[0] != factors.sigma.shape[0]:
        raise LengthMismatchError(
            f"{vals.shape[0]} values vs rank {factors.sigma.shape[0]}"
        )
    return (factors.u * vals) @ factors.v.T
