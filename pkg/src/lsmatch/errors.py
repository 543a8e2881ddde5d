"""Exception hierarchy shared across the package."""


class LsmError(Exception):
    """Base class for all package errors."""


class ParseError(LsmError, ValueError):
    """Input could not be parsed. ``location`` is a line/row number or path."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class ValidationError(LsmError, ValueError):
    pass


class NotFoundError(LsmError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UndefinedError(LsmError, ValueError):
    """A statistic is undefined for the given input (zero counts, zero variance)."""


class InsufficientDataError(LsmError, ValueError):
    pass


class ConfigurationError(LsmError, ValueError):
    pass
