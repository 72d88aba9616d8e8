"""Estimator-style front end over the denoising pipeline.

PatchDenoiser follows the scikit-learn parameter conventions: the
constructor stores parameters verbatim, fit resolves them into a
concrete configuration (estimating the noise level blind when sigma is
None), and transform runs the pipeline. X is a single 2-D grayscale
image, not a sample matrix, so the class is sklearn-style rather than
sklearn-compatible; get_params, set_params, and cloning all work.
"""

import dataclasses
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ImageTooSmallError
from .noise import all_patch_sigma, weak_texture_sigma
from .patches import PatchSpec
from .pipeline import denoise, parameter_defaults

# patch size used for blind noise estimation before the noise level
# (and with it the banded patch size) is known
ESTIMATION_PATCH = 7


def validate_image(X, min_side=2):
    """Coerce X to a float64 2-D image array or raise.

    Accepts anything array-like, requires two dimensions, finite
    values, and sides of at least min_side pixels.
    """
    img = check_array(X, dtype=np.float64, ensure_2d=True)
    if min(img.shape) < min_side:
        raise ImageTooSmallError(
            f"image sides must be at least {min_side}, got {img.shape}"
        )
    return img


def estimate_sigma(X, patch_size=ESTIMATION_PATCH, seed=0):
    """Blind noise-level estimate from weak-texture patches.

    Returns (weak_texture_estimate, all_patch_estimate). The first is
    the better number on textured content; the second is the plain PCA
    estimate over every patch, kept for comparison.
    """
    img = validate_image(X, min_side=patch_size)
    spec = PatchSpec(d=patch_size, stride=1, m=1, window=patch_size)
    return (
        float(weak_texture_sigma(img, spec, seed)),
        float(all_patch_sigma(img, patch_size)),
    )


class PatchDenoiser(BaseEstimator, TransformerMixin):
    """Grayscale image denoiser with noise-adaptive low-rank shrinkage.

    >>> den = PatchDenoiser(sigma=30.0)
    >>> clean_est = den.fit_transform(noisy)

    Parameters left as None resolve at fit time: sigma from a blind
    weak-texture estimate of X, and patch_size / group_size /
    iterations from the noise-level bands. After fit the resolved
    values live in sigma_ and config_; transform additionally stores
    the per-round noise trace in trace_.
    """

    def __init__(
        self,
        sigma=None,
        mode="gwnnm",
        patch_size=None,
        stride=None,
        group_size=None,
        window=None,
        iterations=None,
        delta=0.1,
        eta=0.01,
        gamma=0.6,
        alpha=None,
        tau=0.5,
        weight_c=2.0 * math.sqrt(2.0),
        eps=1e-16,
        seed=0,
        clip_input=False,
    ):
        self.sigma = sigma
        self.mode = mode
        self.patch_size = patch_size
        self.stride = stride
        self.group_size = group_size
        self.window = window
        self.iterations = iterations
        self.delta = delta
        self.eta = eta
        self.gamma = gamma
        self.alpha = alpha
        self.tau = tau
        self.weight_c = weight_c
        self.eps = eps
        self.seed = seed
        self.clip_input = clip_input

    def _resolve_config(self, sigma):
        base = parameter_defaults(sigma, mode=self.mode)
        d = self.patch_size if self.patch_size is not None else base.patch.d
        if self.window is not None:
            window = self.window
        else:
            # banded window, widened if a large explicit patch outgrows it
            window = max(base.patch.window, d)
        patch = PatchSpec(
            d=d,
            stride=self.stride if self.stride is not None else base.patch.stride,
            m=self.group_size if self.group_size is not None else base.patch.m,
            window=window,
        )
        overrides = {
            "patch": patch,
            "delta": self.delta,
            "eta": self.eta,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "tau": self.tau,
            "weight_c": self.weight_c,
            "eps": self.eps,
            "seed": self.seed,
            "clip_input": self.clip_input,
        }
        if self.iterations is not None:
            overrides["iterations"] = self.iterations
        return dataclasses.replace(base, **overrides)

    def fit(self, X, y=None):
        """Resolve the run configuration against X.

        Estimates the noise level from X when sigma is None. y is
        ignored and accepted only for pipeline compatibility.
        """
        img = validate_image(X)
        if self.sigma is not None:
            resolved = float(self.sigma)
        else:
            est_d = self.patch_size if self.patch_size is not None else ESTIMATION_PATCH
            resolved, _ = estimate_sigma(img, est_d, self.seed)
            if resolved <= 0.0:
                raise ValueError(
                    "blind noise estimate is zero; pass sigma explicitly"
                )
        self.sigma_ = resolved
        self.config_ = self._resolve_config(resolved)
        return self

    def transform(self, X):
        """Denoise one image using the fitted configuration.

        Returns the float64 estimate, unclipped. The per-round noise
        trace of this run is kept in trace_.
        """
        check_is_fitted(self, "config_")
        img = validate_image(X, min_side=self.config_.patch.d)
        out, trace = denoise(img, self.config_)
        self.trace_ = trace
        return out

    def predict(self, X):
        """Alias for transform, for predict-style call sites."""
        return self.transform(X)
