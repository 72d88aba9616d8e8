"""Patch-based low-rank grayscale image denoising.

The functional core lives in pipeline.denoise; PatchDenoiser wraps it
in a fit/transform interface with blind noise estimation.
"""

from .errors import (
    ConvergenceFailureError,
    DenoiseError,
    DimensionMismatchError,
    ImageTooSmallError,
    InsufficientCandidatesError,
    LengthMismatchError,
    MalformedFileError,
    UnsupportedFormatError,
)
from .estimator import PatchDenoiser, estimate_sigma, validate_image
from .imgio import add_gaussian_noise, load_image, psnr, quantize, save_image
from .noise import NoiseState, weak_texture_sigma
from .patches import PatchMatrix, PatchSpec, block_match
from .pipeline import (
    DenoiseConfig,
    denoise,
    denoise_components,
    parameter_defaults,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceFailureError",
    "DenoiseError",
    "DenoiseConfig",
    "DimensionMismatchError",
    "ImageTooSmallError",
    "InsufficientCandidatesError",
    "LengthMismatchError",
    "MalformedFileError",
    "NoiseState",
    "PatchDenoiser",
    "PatchMatrix",
    "PatchSpec",
    "UnsupportedFormatError",
    "add_gaussian_noise",
    "block_match",
    "denoise",
    "denoise_components",
    "estimate_sigma",
    "load_image",
    "parameter_defaults",
    "psnr",
    "quantize",
    "save_image",
    "validate_image",
    "weak_texture_sigma",
    "__version__",
]
