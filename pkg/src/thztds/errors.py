"""Exception hierarchy shared by all modules.

Exit codes are part of the CLI contract: 0 success, 2 usage, 3 input
format, 4 numeric/model, 5 I/O.
"""


class ThzError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(ThzError):
    """Bad command-line usage (mirrors argparse's exit code)."""

    exit_code = 2


class FormatError(ThzError):
    """Malformed or rejected input data (bad file, non-finite samples, schema violation)."""

    exit_code = 3


class ComputeError(ThzError):
    """Numeric or model-level failure."""

    exit_code = 4


class DimensionError(ComputeError):
    """Mismatched shapes, lengths, or index out of range."""


class GeometryError(ComputeError):
    """Invalid sample geometry (e.g. non-positive thickness)."""


class GatingError(ComputeError):
    """Time-gate derivation failed (no dominant pulse, empty region)."""


class NoBandError(ComputeError):
    """Validity mask is empty: no usable frequency bins."""


class ModelError(ComputeError):
    """Invalid material or network model."""


class NumericError(ComputeError):
    """Non-finite values produced where finite ones are required (overflow, divergence)."""


class RenderError(ComputeError):
    """Rendering failed (e.g. degenerate value range)."""


class OutputError(ThzError):
    """Failed to write an output artifact."""

    exit_code = 5
