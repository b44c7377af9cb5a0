"""Exception types raised across the package."""


class QLBEError(Exception):
    """Base class for package errors."""


class ParameterError(QLBEError, ValueError):
    """An argument lies outside its valid domain."""


class NumericError(QLBEError, ArithmeticError):
    """A numerical procedure failed to converge or hit an iteration cap."""


class ConfigError(ParameterError):
    """A run configuration is malformed; ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
