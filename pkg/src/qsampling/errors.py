"""Exception hierarchy shared by every module."""


class QSamplingError(ValueError):
    """Base class for all domain errors raised by the package."""

    kind = "error"


class DimensionError(QSamplingError):
    kind = "invalid-dimension"


class SizeError(QSamplingError):
    kind = "size"


class ParameterError(QSamplingError):
    kind = "invalid-parameter"


class PreconditionError(QSamplingError):
    kind = "precondition"


class DomainError(QSamplingError):
    kind = "domain"


class DataError(QSamplingError):
    kind = "data"


class DegenerateInstanceError(QSamplingError):
    kind = "degenerate-instance"
