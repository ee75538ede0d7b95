"""Exception types raised across the package."""


class KdqiError(Exception):
    """Base class for all package errors."""


class ArgumentError(KdqiError, ValueError):
    pass


class DomainMismatch(KdqiError, ValueError):
    pass


class NormalizationError(ArgumentError):
    pass


class UnitarityError(KdqiError, ValueError):
    pass


class SearchError(KdqiError, RuntimeError):
    pass


class ConstructionError(KdqiError, RuntimeError):
    pass


class ConfigError(KdqiError, ValueError):
    pass
