"""Exception hierarchy for mfbtest."""


class MfbError(ValueError):
    """Base class for all errors raised by mfbtest."""


class UnknownWaveletError(MfbError):
    pass


class ScaleTooLargeError(MfbError):
    pass


class EmptySeriesError(MfbError):
    pass


class ZeroEnergyError(MfbError):
    pass


class BandIndexError(MfbError, IndexError):
    pass


class NonPositiveVarianceError(MfbError):
    pass


class SeriesTooShortError(MfbError):
    pass


class LengthMismatchError(MfbError):
    pass


class LagOutOfRangeError(MfbError):
    pass


class SingularCovarianceError(MfbError):
    """Raised when a covariance matrix cannot be Cholesky factorized.

    Attributes
    ----------
    condition_number : float
        2-norm condition number of the offending matrix (``inf`` if singular).
    """

    def __init__(self, message, condition_number=float("nan")):
        super().__init__(message)
        self.condition_number = condition_number


class InvalidParameterError(MfbError):
    pass


class ConfigurationError(MfbError):
    pass


class IngestError(MfbError):
    pass


class ParseError(IngestError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonPositivePriceError(IngestError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyAfterSlicingError(IngestError):
    pass
