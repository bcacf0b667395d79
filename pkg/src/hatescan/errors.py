"""Exception types shared across the package.

The split matters to callers: DataError means the input files or rows are
unusable, ModelError means a model artifact is missing, corrupt or
incompatible. The command line maps them to distinct exit codes.
"""


class DataError(Exception):
    """Raised when input data cannot be loaded or fails validation."""


class ModelError(Exception):
    """Raised when a model artifact is absent, corrupt or incompatible."""
