"""Exception types shared across the simulator."""


class CipsacError(Exception):
    """Base class for all simulator errors."""


class ConfigError(CipsacError, ValueError):
    """Invalid system or experiment configuration."""


class DimensionError(CipsacError, ValueError):
    """Array arguments with inconsistent or empty dimensions."""


class InvalidInputError(CipsacError, ValueError):
    """Non-finite or otherwise malformed numeric input."""


class IllConditionedError(CipsacError, ArithmeticError):
    """Linear system too close to singular to solve reliably."""


class CodebookFormatError(CipsacError, ValueError):
    """Malformed codebook file; carries the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
