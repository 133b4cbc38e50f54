"""Exception hierarchy shared across the package."""


class Error(Exception):
    """Base class for all stablematch errors."""


class StructuralError(Error):
    """Malformed inputs: shape mismatches, bad indices, broken invariants."""


class DomainError(Error):
    """Input outside an operation's mathematical domain (e.g. non-IR allocation)."""


class ConfigError(Error):
    """Invalid configuration: unknown family, model/algorithm mismatch, bad parameters."""


class SchemaError(Error):
    """Instance file does not match the JSON schema."""


class CapacityError(Error):
    """Requested computation exceeds a desk-scale size guard."""
