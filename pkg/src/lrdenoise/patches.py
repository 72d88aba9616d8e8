"""Patch grids, similarity search, and overlap aggregation."""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    DimensionMismatchError,
    ImageTooSmallError,
    InsufficientCandidatesError,
)


@dataclass(frozen=True)
class PatchSpec:
    """Geometry of patch extraction and grouping.

    d: patch side in pixels
    stride: key-patch step
    m: number of similar patches per group, key included
    window: side of the square search region the candidate patches must
        lie inside, centered on the key patch
    """

    d: int
    stride: int
    m: int
    window: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"patch side must be at least 2, got {self.d}")
        if self.stride < 1:
            raise ValueError(f"stride must be positive, got {self.stride}")
        if self.m < 1:
            raise ValueError(f"group size must be positive, got {self.m}")
        if self.window < self.d:
            raise ValueError(
                f"search window {self.window} cannot be smaller than patch side {self.d}"
            )


@dataclass
class PatchMatrix:
    """A group of vectorized similar patches.

    data: (d*d, m) float64, column j is patch j flattened row-major
    refs: (m, 2) int64 top-left corners, row 0 is the key patch
    key: (row, col) of the key patch
    """

    data: np.ndarray
    refs: np.ndarray
    key: tuple = field(default=None)

    @property
    def m(self):
        return self.data.shape[1]

    @property
    def d(self):
        side = int(round(self.data.shape[0] ** 0.5))
        return side


def _check_fits(img, d):
    height, width = img.shape
    if height < d or width < d:
        raise ImageTooSmallError(
            f"image {height}x{width} cannot hold a {d}x{d} patch"
        )


def _axis_positions(extent, d, stride):
    last = extent - d
    positions = list(range(0, last + 1, stride))
    if positions[-1] != last:
        positions.append(last)
    return positions


def key_patch_grid(img, spec):
    """Row-major top-left corners of the key patches.

    Steps by spec.stride and always includes the last valid row and
    column so every pixel is covered by at least one key patch.
    """
    img = np.asarray(img)
    _check_fits(img, spec.d)
    rows = _axis_positions(img.shape[0], spec.d, spec.stride)
    cols = _axis_positions(img.shape[1], spec.d, spec.stride)
    return [(r, c) for r in rows for c in cols]


def patch_stack(img, d, stride):
    """All patches on the key grid as (refs (N, 2), patches (N, d, d))."""
    img = np.asarray(img, dtype=np.float64)
    refs = np.asarray(key_patch_grid(img, PatchSpec(d, stride, 1, d)), dtype=np.int64)
    windows = sliding_window_view(img, (d, d))
    return refs, windows[refs[:, 0], refs[:, 1]]


def block_match(img, key, spec):
    """Collect the spec.m patches most similar to the key patch.

    Similarity is the sum of squared differences over the candidate
    patches inside the search window (clipped at the image border).
    Column 0 of the result is always the key patch itself; the rest
    follow in nondecreasing SSD order with ties broken row-major.
    """
    img = np.asarray(img, dtype=np.float64)
    _check_fits(img, spec.d)
    height, width = img.shape
    r0, c0 = key
    if not (0 <= r0 <= height - spec.d and 0 <= c0 <= width - spec.d):
        raise DimensionMismatchError(f"key patch {key} out of bounds for {img.shape}")

    lo = (spec.window - spec.d) // 2
    hi = (spec.window - spec.d) - lo
    r_lo, r_hi = max(0, r0 - lo), min(height - spec.d, r0 + hi)
    c_lo, c_hi = max(0, c0 - lo), min(width - spec.d, c0 + hi)
    n_rows = r_hi - r_lo + 1
    n_cols = c_hi - c_lo + 1
    if n_rows * n_cols < spec.m:
        raise InsufficientCandidatesError(
            f"window holds {n_rows * n_cols} candidates, need {spec.m}"
        )

    windows = sliding_window_view(img, (spec.d, spec.d))
    region = windows[r_lo : r_hi + 1, c_lo : c_hi + 1]
    key_patch = windows[r0, c0]
    ssd = np.sum((region - key_patch) ** 2, axis=(2, 3)).ravel()

    key_idx = (r0 - r_lo) * n_cols + (c0 - c_lo)
    order = np.argsort(ssd, kind="stable")
    order = order[order != key_idx]
    picked = np.concatenate(([key_idx], order[: spec.m - 1]))

    rows = r_lo + picked // n_cols
    cols = c_lo + picked % n_cols
    patches = windows[rows, cols]
    data = patches.reshape(spec.m, spec.d * spec.d).T.copy()
    refs = np.stack([rows, cols], axis=1).astype(np.int64)
    return PatchMatrix(data=data, refs=refs, key=(r0, c0))


def _normalize_estimates(estimates):
    if isinstance(estimates, tuple) and len(estimates) == 3:
        refs, patches, weights = estimates
        refs = np.asarray(refs, dtype=np.int64)
        patches = np.asarray(patches, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
    else:
        items = list(estimates)
        if not items:
            return (
                np.empty((0, 2), np.int64),
                np.empty((0, 0, 0), np.float64),
                np.empty(0, np.float64),
            )
        refs = np.asarray([it[0] for it in items], dtype=np.int64)
        try:
            patches = np.asarray([it[1] for it in items], dtype=np.float64)
        except ValueError:
            raise DimensionMismatchError("estimate patches must share one shape") from None
        weights = np.asarray([it[2] for it in items], dtype=np.float64)
    if patches.ndim != 3 or refs.shape != (patches.shape[0], 2):
        raise DimensionMismatchError("estimates do not form (refs, patches, weights) arrays")
    return refs, patches, weights


def aggregate(estimates, width, height, fallback):
    """Per-pixel weighted average of overlapping patch estimates.

    estimates is either an iterable of (ref, patch, weight) triples or a
    prestacked (refs, patches, weights) tuple of arrays. Pixels covered
    by no estimate copy their value from fallback.
    """
    fallback = np.asarray(fallback, dtype=np.float64)
    if fallback.shape != (height, width):
        raise DimensionMismatchError(
            f"fallback shape {fallback.shape} does not match {height}x{width}"
        )
    refs, patches, weights = _normalize_estimates(estimates)
    if refs.shape[0] == 0:
        return fallback.copy()
    ph, pw = patches.shape[1], patches.shape[2]
    if (
        refs.min() < 0
        or (refs[:, 0] + ph).max() > height
        or (refs[:, 1] + pw).max() > width
    ):
        raise DimensionMismatchError("patch reference out of image bounds")
    if np.any(weights <= 0):
        raise ValueError("aggregation weights must be positive")

    numer = np.zeros(height * width)
    denom = np.zeros(height * width)
    base = refs[:, 0] * width + refs[:, 1]
    # one bincount pass per in-patch offset keeps the scatter vectorized
    # while the fixed input order keeps the sums reproducible
    for di in range(ph):
        for dj in range(pw):
            idx = base + (di * width + dj)
            numer += np.bincount(idx, weights=patches[:, di, dj] * weights, minlength=height * width)
            denom += np.bincount(idx, weights=weights, minlength=height * width)

    covered = denom > 0
    out = fallback.copy().ravel()
    out[covered] = numer[covered] / denom[covered]
    return out.reshape(height, width)
