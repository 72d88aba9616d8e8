"""Grayscale image I/O and measurement utilities.

Images are float64 arrays of shape (height, width) on the 0..255 scale.
Processing never clips; values leave [0, 255] freely until an image is
written back to disk.
"""

import math

import numpy as np

from .errors import (
    DimensionMismatchError,
    MalformedFileError,
    UnsupportedFormatError,
)

PEAK = 255.0

_OTHER_PNM_MAGICS = {b"P1", b"P2", b"P3", b"P4", b"P6", b"P7"}


def _next_token(f):
    """Return the next whitespace-delimited header token, honoring # comments."""
    tok = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            if tok:
                return tok
            raise MalformedFileError("truncated header")
        if ch == b"#" and not tok:
            while ch not in (b"", b"\n", b"\r"):
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                # the single byte of whitespace after the token is consumed here,
                # which is exactly the separator the raw-data section expects
                return tok
            continue
        tok += ch


def _int_token(f, what):
    tok = _next_token(f)
    try:
        return int(tok)
    except ValueError:
        raise MalformedFileError(f"bad {what} field {tok!r}") from None


def load_image(path):
    """Read a binary 8-bit grayscale PGM file into a float64 array.

    Raises MalformedFileError for files that do not parse and
    UnsupportedFormatError for valid netpbm variants other than
    maxval-255 P5.
    """
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic in _OTHER_PNM_MAGICS:
            raise UnsupportedFormatError(f"unsupported netpbm magic {magic!r}")
        if magic != b"P5":
            raise MalformedFileError(f"not a PGM file (magic {magic!r})")
        width = _int_token(f, "width")
        height = _int_token(f, "height")
        if width <= 0 or height <= 0:
            raise MalformedFileError(f"bad image dimensions {width}x{height}")
        maxval = _int_token(f, "maxval")
        if maxval != 255:
            raise UnsupportedFormatError(f"only maxval 255 supported, got {maxval}")
        raw = f.read(width * height)
        if len(raw) < width * height:
            raise MalformedFileError("truncated pixel data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return pixels.astype(np.float64)


def quantize(img):
    """Clamp to [0, 255] and round half away from zero, returning uint8."""
    arr = np.asarray(img, dtype=np.float64)
    clamped = np.clip(arr, 0.0, PEAK)
    # values are non-negative after clamping, so floor(x + 0.5) rounds
    # halves away from zero; np.round would round them to even instead
    return np.floor(clamped + 0.5).astype(np.uint8)


def save_image(path, img):
    """Write a float64 image as binary PGM, quantizing to 8 bits."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionMismatchError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    pixels = quantize(arr)
    height, width = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def add_gaussian_noise(img, sigma, seed):
    """Add seeded white Gaussian noise of standard deviation sigma.

    The result is float64 and intentionally not clipped to [0, 255].
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    arr = np.asarray(img, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return arr + rng.normal(0.0, sigma, arr.shape)


def psnr(a, b):
    """Peak signal-to-noise ratio in dB against a peak of 255.

    Identical inputs give math.inf.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shape mismatch {x.shape} vs {y.shape}")
    mse = np.mean((x - y) ** 2)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)
