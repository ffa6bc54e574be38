"""Exception types raised across the package."""


class ConvIneqError(Exception):
    """Base class for all package errors."""


class NonGroupTable(ConvIneqError):
    pass


class NonPositiveMeasure(ConvIneqError):
    pass


class CarrierMismatch(ConvIneqError):
    pass


class NonAbelianCarrier(ConvIneqError):
    pass


class UnsupportedCarrier(ConvIneqError):
    pass


class ToleranceNotMet(ConvIneqError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InternalCrossCheckFailed(ConvIneqError):
    pass


class NegativeThreshold(ConvIneqError):
    pass


class NotConvex(ConvIneqError):
    pass


class UnboundedRightDerivativeAtZero(ConvIneqError):
    pass


class PEqualsOne(ConvIneqError):
    pass


class InadmissibleExponents(ConvIneqError):
    pass


class ConjugateNotEvenInteger(ConvIneqError):
    pass


class ParameterOutOfRange(ConvIneqError):
    pass


class ConfigError(ConvIneqError):
    pass


class StalledAscent(ConvIneqError):
    pass
