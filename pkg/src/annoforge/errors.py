"""Exception hierarchy shared across the package.

``ValidationError`` covers bad inputs and artifact/contract violations
(CLI exit code 2); ``NumericError`` covers NaN/Inf aborts (exit code 3).
"""


class AnnoforgeError(Exception):
    """Base class for all package errors."""


class ValidationError(AnnoforgeError):
    """Input data or artifact violates a documented contract."""


class ShardFormatError(ValidationError):
    """Malformed shard header or magic bytes."""


class DimensionMismatchError(ValidationError):
    """Inconsistent vector dimensions across shards or inputs."""


class DuplicateIdError(ValidationError):
    """Duplicate record ids within one corpus."""


class UnscorableTermError(ValidationError):
    """Term has too few positive examples to train a scorer."""


class NumericError(AnnoforgeError):
    """Non-finite values where finite numbers are required."""
