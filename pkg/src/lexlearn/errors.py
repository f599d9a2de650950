"""Shared exception hierarchy."""


class LexlearnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LexlearnError):
    """A configuration or data file could not be loaded."""
