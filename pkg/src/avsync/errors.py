"""Exception types shared across the toolkit.

Usage errors (bad arguments, misused APIs) raise ValueError; the classes
here mark problems with input *data*, so the CLI can map them to a
distinct exit code.
"""


class AvsyncError(Exception):
    """Base class for data-level errors."""


class UnsupportedFormatError(AvsyncError):
    """File is structurally valid but uses a codec/layout we do not handle."""


class MalformedFileError(AvsyncError):
    """File violates its container format."""


class DataError(AvsyncError):
    """Input data violates a contract (bad manifest, incomplete track, ...)."""
