"""Exception types shared across the package."""


class FedalError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FedalError):
    """Invalid configuration value or combination."""


class ShapeError(FedalError):
    """Array dimensions do not match what an operation requires."""


class DomainError(FedalError):
    """Input is outside the mathematical domain of an operation."""


class ProtocolError(FedalError):
    """An operation was invoked in a state the protocol forbids."""


class TrainingError(FedalError):
    """Local training cannot proceed (e.g. empty labeled pool)."""


class CsvSchemaError(FedalError):
    """A CSV file violates the expected schema; message names the line."""
