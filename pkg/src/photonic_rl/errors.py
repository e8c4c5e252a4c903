"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter values or inconsistent configuration."""


class DimensionError(ValueError):
    """Array shapes do not agree."""


class NumericalDivergenceError(RuntimeError):
    """A state or TD error became non-finite."""


class UsageError(RuntimeError):
    """An object was used in a state that does not allow the call."""


class ParseError(ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
