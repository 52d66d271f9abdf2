"""Exception types shared across the package."""


class AtclError(Exception):
    """Base class for all package errors."""


class ZeroVector(AtclError, ValueError):
    """A vector's norm is too small to define a direction."""


class DimensionMismatch(AtclError, ValueError):
    pass


class InvalidShape(AtclError, ValueError):
    pass


class BatchTooSmall(AtclError, ValueError):
    """No valid (anchor, positive, negative) triplet in the batch."""


class ConfigError(AtclError, ValueError):
    pass


class ParseError(AtclError, ValueError):
    """Malformed dataset text. ``line`` is 1-based; 1 means the header."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line
