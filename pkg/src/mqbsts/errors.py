"""Exception hierarchy shared across the package."""


class MqbstsError(Exception):
    """Base class for package-specific failures."""


class DataError(MqbstsError):
    """Malformed or inconsistent input data (CSV schema, NaNs, shape mismatches)."""


class NumericalError(MqbstsError):
    """Numerical failure inside a sampler or decomposition (non-PD matrix, degenerate state)."""
