"""
Exception types shared across the scnplus package.

Every error raised on purpose by the library derives from ScnPlusError so the
command-line front end can map it onto an exit code.
"""

from typing import Optional


class ScnPlusError(Exception):
    """Base exception for scnplus."""

    pass


class DataError(ScnPlusError):
    """Custom exception for dataset loading and shape errors."""

    def __init__(
        self, message: str, row: Optional[int] = None, column: Optional[int] = None
    ):
        self.row = row
        self.column = column
        if row is not None and column is not None:
            message = f"{message} (row {row}, col {column})"
        super().__init__(message)


class NormalizationError(DataError):
    """Custom exception for normalizer fitting and application errors."""

    pass


class ModelFileError(DataError):
    """Custom exception for unreadable or incompatible model files."""

    pass


class ConfigError(ScnPlusError):
    """Custom exception for invalid configuration values or files."""

    pass


class DegenerateCandidateError(ScnPlusError):
    """Raised when a candidate node cannot produce finite output weights."""

    pass


class TrainingAbortedError(ScnPlusError):
    """Raised when a node step cannot find a single usable candidate."""

    pass


class ExperimentError(ScnPlusError):
    """Custom exception for benchmark runs that cannot produce statistics."""

    pass
