"""Exception hierarchy shared by the library and the CLI."""


class TabQGANError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TabQGANError, ValueError):
    """Invalid configuration or argument values."""


class SchemaError(TabQGANError, ValueError):
    """A tabular schema violates its invariants."""


class DataError(TabQGANError, ValueError):
    """Row data does not match the schema."""


class DecodeError(TabQGANError, ValueError):
    """A bitstring cannot be mapped back to a row."""


class IngestionError(TabQGANError, ValueError):
    """CSV ingestion failed."""


class MetricError(TabQGANError, ValueError):
    """A metric cannot be computed for the given tables."""


class TrainingError(TabQGANError, RuntimeError):
    """Training produced a non-finite quantity."""
