"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Two Pauli strings (or a string and a model) disagree on qubit count."""


class RegionError(ValueError):
    """A region contains repeated, negative or out-of-range qubit indices."""


class EnumerationCapError(ValueError):
    """An exact (table-based) operation was requested above the enumeration cap."""


class InsufficientDataError(RuntimeError):
    """Not enough usable decay points to fit an eigenvalue."""


class IndeterminateDecayError(InsufficientDataError):
    """All decay points fell below the noise floor."""


class ConfigError(ValueError):
    """An experiment configuration is invalid or internally inconsistent."""


class StageError(RuntimeError):
    """A pipeline stage failed; downstream stages were skipped."""
