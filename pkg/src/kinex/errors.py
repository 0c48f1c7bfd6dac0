"""Exception hierarchy.

ConfigError means the caller's configuration is malformed (CLI exit 2);
everything else derived from KinexError is a runtime/data failure (exit 1).
"""


class KinexError(Exception):
    """Base class for all package errors."""


class ConfigError(KinexError):
    """Invalid run/scenario configuration or schedule."""


class ParameterError(KinexError):
    """Operation argument outside its documented range."""


class StateError(KinexError):
    """Population state invalid for the requested operation."""


class DataError(KinexError):
    """Input data cannot support the requested computation."""


class EmptyInputError(DataError):
    """Empty sample, series or snapshot sequence."""


class InsufficientTailError(DataError):
    """Fewer tail points than a Pareto fit requires."""


class NoOverlapError(DataError):
    """Reference and target supports do not overlap."""


class UndefinedMeasureError(DataError):
    """Statistic undefined for this input (e.g. Gini of zero mean)."""


class AllocationError(DataError):
    """Money cannot be allocated (empty band, zero proportional total)."""


class ValidationError(DataError):
    """Row-level failure while ingesting an income table."""
