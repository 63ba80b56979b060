"""
Exception hierarchy for the freqclue package.

Every error raised on purpose by the package derives from FreqClueError and
carries the exit code the command-line entry point reports for it.
"""


class FreqClueError(Exception):
    """Base exception for freqclue errors."""

    exit_code = 1


class ConfigError(FreqClueError, ValueError):
    """Exception raised for invalid configuration or flag values."""

    exit_code = 2


class InvalidInputError(FreqClueError, ValueError):
    """Exception raised when numerical input contains NaN or Inf."""

    exit_code = 3


class ShapeError(FreqClueError, ValueError):
    """Exception raised when tensor shapes are incompatible."""

    exit_code = 4


class PartitionError(ShapeError):
    """Exception raised when a plane cannot be tiled by a block grid."""

    exit_code = 5


class DegenerateBandError(FreqClueError, ValueError):
    """Exception raised when a weight matrix would have empty bands."""

    exit_code = 6


class IngestionError(FreqClueError):
    """Exception raised when frames cannot be read or sampled."""

    exit_code = 7


class GeometryError(FreqClueError, ValueError):
    """Exception raised when a crop box falls outside its frame."""

    exit_code = 8


class FormatError(FreqClueError, ValueError):
    """Exception raised for malformed binary tensor or feature files."""

    exit_code = 9


class DegenerateDataError(FreqClueError, ValueError):
    """Exception raised when training data cannot support a classifier."""

    exit_code = 10


class UndefinedMetricError(FreqClueError, ValueError):
    """Exception raised when a metric is undefined for the given labels."""

    exit_code = 11


class FingerprintMismatchError(FreqClueError):
    """Exception raised when artifacts were produced with different settings."""

    exit_code = 12


class FileOperationError(FreqClueError, OSError):
    """Exception raised for file I/O operation errors."""

    exit_code = 13


class DataCorruptionError(FreqClueError, ValueError):
    """Exception raised when data corruption is detected."""

    exit_code = 14
