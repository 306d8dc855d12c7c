class SurfnetError(Exception):
    """Base class for all package errors."""


class InputError(SurfnetError):
    """Unreadable or malformed input data (CLI exit code 2)."""


class ConfigError(SurfnetError):
    """Invalid parameters or configuration (CLI exit code 3)."""


class InvariantError(SurfnetError):
    """An internal consistency check failed (CLI exit code 4)."""
