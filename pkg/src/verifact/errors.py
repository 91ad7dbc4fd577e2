"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
TransportError -> 3, DataError -> 4.
"""


class VerifactError(Exception):
    """Base class for all package errors."""


class ConfigError(VerifactError):
    """Invalid configuration, flags, or argument combinations."""


class DataError(VerifactError):
    """Malformed or inconsistent input data."""


class SchemaError(DataError):
    """A record is structurally valid but violates the expected schema."""


class ParseError(DataError):
    """A file could not be parsed at all."""


class ScoreRangeError(DataError):
    """A reply was numeric but outside the valid score range."""


class TransportError(VerifactError):
    """Network or provider failure that exhausted retries."""


class FixtureMissError(DataError):
    """The stub provider has no recorded response for a request."""
