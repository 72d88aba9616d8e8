"""Iterative patch-group denoising pipeline.

One round regularizes the working image back toward the noisy input,
re-groups similar patches, shrinks each group's singular value spectrum
against the current residual-noise estimate, and aggregates overlapping
estimates into the next working image. The spectrum of every group is
also split at a threshold into strong and weak parts, and the images
rebuilt from each part feed an edge-feedback term in the next round's
regularization.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .lowrank import (
    ShrinkOutcome,
    adjust_singulars,
    nnm_shrink,
    recompose,
    split_spectrum,
    svd,
    wnnm_shrink,
    wnnm_weights,
)
from .noise import (
    NoiseState,
    alpha_for,
    combined_estimate,
    filtered_noise_std,
    geometric_residual_std,
    residual_std,
    weak_texture_sigma,
)
from .patches import PatchSpec, block_match, key_patch_grid

logger = logging.getLogger(__name__)

MODES = ("nnm", "wnnm", "gwnnm")

DEFAULT_WINDOW = 31
WIDE_WINDOW = 61  # worth trying on pseudo-periodic content such as fingerprints

_FLUSH_GROUPS = 512


@dataclass
class DenoiseConfig:
    """Full parameter set for one denoising run.

    iterations counts images in the sequence, so iterations - 1
    processing rounds run. alpha left as None resolves from the noise
    level at run time; modes other than gwnnm force alpha to 1 and the
    edge feedback eta to 0.
    """

    sigma: float
    patch: PatchSpec
    iterations: int
    mode: str = "gwnnm"
    delta: float = 0.1
    eta: float = 0.01
    gamma: float = 0.6
    alpha: float | None = None
    tau: float = 0.5
    weight_c: float = 2.0 * math.sqrt(2.0)
    eps: float = 1e-16
    seed: int = 0
    clip_input: bool = False

    def __post_init__(self):
        self.mode = str(self.mode).lower()
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.iterations < 2:
            raise ValueError(f"need at least 2 iterations, got {self.iterations}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.weight_c <= 0:
            raise ValueError(f"weight constant must be positive, got {self.weight_c}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def parameter_defaults(sigma, mode="gwnnm"):
    """Default configuration for a given noise level.

    Patch size, group size, and round count step up through four noise
    bands; the remaining constants are shared across bands.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if sigma <= 20:
        d, m, iterations = 6, 70, 8
    elif sigma <= 40:
        d, m, iterations = 7, 90, 12
    elif sigma <= 60:
        d, m, iterations = 8, 120, 14
    else:
        d, m, iterations = 9, 140, 14
    patch = PatchSpec(d=d, stride=4, m=m, window=DEFAULT_WINDOW)
    return DenoiseConfig(sigma=sigma, patch=patch, iterations=iterations, mode=mode)


def regularize_step(noisy, current, high, low, delta, eta):
    """Blend the working image back toward the noisy input plus edge feedback."""
    arrays = [np.asarray(a, dtype=np.float64) for a in (noisy, current, high, low)]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"image shapes differ: {sorted(shapes)}")
    noisy, current, high, low = arrays
    return current + delta * (noisy - current) + eta * (high - low)


def shrink_group(factors, m, sigma_hat, config):
    """Shrink one group's spectrum, returning the full bookkeeping record.

    The weighted modes estimate per-direction signal strength first and
    weight the threshold inversely to it, with the overall scale tied to
    the squared residual noise level. nnm mode applies one constant
    threshold, the closed-form solution of the convex relaxation, set at
    the expected top singular value of a pure-noise matrix of the same
    shape so that noise-only directions are annihilated.
    """
    sigma = factors.sigma
    adjusted = adjust_singulars(sigma, m, sigma_hat)
    if config.mode == "nnm":
        p = factors.u.shape[0]
        theta = sigma_hat * (p**0.5 + m**0.5)
        weights = np.full_like(sigma, theta)
        shrunk = nnm_shrink(sigma, theta)
    else:
        scale = config.weight_c * 2.0 * sigma_hat * sigma_hat
        if scale > 0.0:
            weights = wnnm_weights(adjusted, scale, m, config.eps)
        else:
            weights = np.zeros_like(sigma)
        shrunk = wnnm_shrink(sigma, weights)
    return ShrinkOutcome(sigma=sigma, adjusted=adjusted, weights=weights, shrunk=shrunk)


def process_patch(matrix, sigma_hat, config):
    """Denoise one patch group.

    Returns (full, high, low), each of shape (m, d, d): the denoised
    patches and their strong- and weak-spectrum components.
    """
    if sigma_hat < 0:
        raise ValueError(f"sigma_hat must be non-negative, got {sigma_hat}")
    factors = svd(matrix.data)
    outcome = shrink_group(factors, matrix.m, sigma_hat, config)
    high, low = split_spectrum(outcome.shrunk, config.tau)
    d, m = matrix.d, matrix.m
    full = recompose(factors, outcome.shrunk).T.reshape(m, d, d)
    high_part = recompose(factors, high).T.reshape(m, d, d)
    low_part = recompose(factors, low).T.reshape(m, d, d)
    return full, high_part, low_part


def _worker_count():
    raw = os.environ.get("LRD_THREADS", "").strip()
    cpu = os.cpu_count() or 1
    if raw:
        try:
            requested = int(raw)
        except ValueError:
            logger.warning("ignoring non-integer LRD_THREADS=%r", raw)
        else:
            return max(1, min(requested, cpu))
    return min(cpu, 8)


def _noise_state(k, y, y_cur, config, alpha_eff):
    """Residual-noise estimate for round k.

    The filtered-noise level is the plain RMS of everything removed so
    far, which overstates removed noise whenever structure was lost with
    it. The geometric level re-measures the removed image y - y_cur with
    the weak-texture estimator, which ignores its structured part, so
    the second residual estimate runs a little higher and slows the
    decay of the shrinkage threshold.
    """
    if k == 1:
        # nothing has been removed yet; both residual estimates pin to
        # the nominal level and the first round shrinks against sigma
        s = config.sigma
        return NoiseState(s, 0.0, s, 0.0, s, s, config.gamma, alpha_eff)
    flt = filtered_noise_std(y, y_cur)
    res = residual_std(config.sigma, flt, config.gamma)
    if config.mode == "gwnnm":
        geom = weak_texture_sigma(y - y_cur, config.patch, config.seed)
        res_geom = geometric_residual_std(config.sigma, geom, config.gamma)
        hat = combined_estimate(res, res_geom, alpha_eff)
    else:
        geom = 0.0
        res_geom = 0.0
        hat = res
    return NoiseState(config.sigma, flt, res, geom, res_geom, hat, config.gamma, alpha_eff)


def denoise(img, config):
    """Run the full iterative pipeline on one grayscale image.

    Returns (denoised, trace) where trace lists one NoiseState per
    processing round. The output is float64 and not clipped.
    """
    out, _, _, trace = denoise_components(img, config)
    return out, trace


def denoise_components(img, config):
    """Like denoise, also returning the final spectrum component images.

    Returns (denoised, high, low, trace). high holds the aggregated
    strong-spectrum reconstruction of the last round and low the weak
    remainder; they sum to the denoised image.
    """
    y = np.asarray(img, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D image, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("image must be finite")
    if config.clip_input:
        y = np.clip(y, 0.0, 255.0)
    spec = config.patch
    grid = key_patch_grid(y, spec)
    height, width = y.shape
    size = height * width

    if config.mode == "gwnnm":
        alpha_eff = config.alpha if config.alpha is not None else alpha_for(config.sigma)
        eta_eff = config.eta
    else:
        alpha_eff = 1.0
        eta_eff = 0.0

    y_cur = y.copy()
    y_high = y.copy()
    y_low = y.copy()
    # aggregated group-mean layer; zero at the start so the first
    # feedback term (y_high - y_mean) - y_low vanishes exactly
    y_mean = np.zeros_like(y)
    trace = []
    workers = _worker_count()

    for k in range(1, config.iterations):
        # the high component carries the scene brightness, so the raw
        # difference high - low would feed the whole image back into
        # itself and drift toward y / (1 - eta / delta). Subtracting
        # the group-mean layer first leaves only structure the
        # shrinkage retained beyond each group's average patch, which
        # is the edge and texture detail the feedback is meant to push.
        y_reg = regularize_step(y, y_cur, y_high - y_mean, y_low, config.delta, eta_eff)
        state = _noise_state(k, y, y_cur, config, alpha_eff)
        trace.append(state)
        hat = state.sigma_hat
        logger.info("round %d/%d sigma_hat=%.3f", k, config.iterations - 1, hat)

        def work(key):
            matrix = block_match(y_reg, key, spec)
            full, high, low = process_patch(matrix, hat, config)
            mean_patch = matrix.data.mean(axis=1).reshape(spec.d, spec.d)
            mean = np.broadcast_to(mean_patch, full.shape)
            return matrix.refs, full, high, low, mean

        numers = [np.zeros(size) for _ in range(4)]
        denom = np.zeros(size)

        def flush(buffer):
            refs = np.concatenate([b[0] for b in buffer])
            stacks = [np.concatenate([b[i] for b in buffer]) for i in (1, 2, 3, 4)]
            base = refs[:, 0] * width + refs[:, 1]
            for di in range(spec.d):
                for dj in range(spec.d):
                    idx = base + (di * width + dj)
                    np.add(denom, np.bincount(idx, minlength=size), out=denom)
                    for numer, stack in zip(numers, stacks):
                        np.add(numer, np.bincount(idx, weights=stack[:, di, dj], minlength=size), out=numer)

        # flush cadence is fixed so results do not depend on worker count
        buffer = []
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for result in pool.map(work, grid, chunksize=16):
                    buffer.append(result)
                    if len(buffer) >= _FLUSH_GROUPS:
                        flush(buffer)
                        buffer = []
        else:
            for key in grid:
                buffer.append(work(key))
                if len(buffer) >= _FLUSH_GROUPS:
                    flush(buffer)
                    buffer = []
        if buffer:
            flush(buffer)

        covered = denom > 0

        def finish(numer, fallback):
            out = fallback.copy().ravel()
            out[covered] = numer[covered] / denom[covered]
            return out.reshape(height, width)

        y_cur = finish(numers[0], y_reg)
        y_high = finish(numers[1], y_reg)
        y_low = finish(numers[2], np.zeros_like(y))
        y_mean = finish(numers[3], y_reg)

    res_values = [s.sigma_res for s in trace]
    rises = sum(b > a for a, b in zip(res_values, res_values[1:]))
    if rises:
        # the residual estimate normally decays; a rise is worth a look
        # but does not invalidate the run
        logger.warning(
            "sigma_res rose in %d of %d steps", rises, len(res_values) - 1
        )
    return y_cur, y_high, y_low, trace
