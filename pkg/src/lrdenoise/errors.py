"""Exception types raised by the library.

File write failures are not wrapped; they propagate as OSError.
"""


class DenoiseError(Exception):
    """Base class for all library errors."""


class MalformedFileError(DenoiseError):
    """Input file does not parse as a PGM image."""


class UnsupportedFormatError(DenoiseError):
    """File parses but is not 8-bit binary grayscale."""


class DimensionMismatchError(DenoiseError, ValueError):
    """Arrays that must share a shape, or refs outside the image, do not line up."""


class LengthMismatchError(DenoiseError, ValueError):
    """Paired 1-D inputs differ in length."""


class ImageTooSmallError(DenoiseError, ValueError):
    """Image cannot hold a single patch of the requested size."""


class InsufficientCandidatesError(DenoiseError, ValueError):
    """Search window holds fewer candidate patches than the group size."""


class ConvergenceFailureError(DenoiseError, RuntimeError):
    """The SVD backend failed to converge."""
