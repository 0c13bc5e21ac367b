"""Exception types shared across the package."""


class SoftgateError(Exception):
    """Base class for all package errors."""


class ParseError(SoftgateError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SoftgateError):
    """Input violates a documented invariant or precondition."""


class ArtifactError(SoftgateError):
    """Calibration artifact cannot be read: bad schema, corruption."""
