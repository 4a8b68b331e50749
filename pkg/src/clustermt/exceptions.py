class ClusterMTError(Exception):
    """Base class for all errors raised by clustermt."""


class ConfigurationError(ClusterMTError, ValueError):
    pass


class ArgumentError(ClusterMTError, ValueError):
    pass


class ApplicabilityError(ClusterMTError):
    """A metamorphic relation cannot be applied to the given system or data."""


class DegenerateHullError(ClusterMTError, ValueError):
    pass


class UndefinedCorrelationError(ClusterMTError, ValueError):
    pass


class EmptyCandidateError(ClusterMTError):
    """Every candidate system was eliminated by a must-have relation."""
