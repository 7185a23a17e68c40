"""Exception types shared across the package."""


class LobsimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LobsimError):
    """Bad configuration, missing file, or schema mismatch. CLI exit code 2."""


class DegenerateDataError(LobsimError):
    """Input data is unusable for the requested computation. CLI exit code 1."""
