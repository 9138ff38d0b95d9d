"""Exception hierarchy shared by all modules."""


class PliLabError(Exception):
    """Base class for every error raised by pli_lab."""


class DimensionError(PliLabError, ValueError):
    pass


class StabilityError(PliLabError):
    """A matrix that must be Hurwitz is not (or is only marginally stable).

    The offending spectral abscissa is kept on the instance so callers can
    report how far outside the stabilizing set they are.
    """

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class NumericalError(PliLabError):
    pass


class ControllabilityError(PliLabError):
    pass


class SamplingError(PliLabError):
    pass


class CertificationError(PliLabError):
    pass


class SearchError(PliLabError):
    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class IllConditionedWarning(UserWarning):
    """Emitted when a result was computed through a badly conditioned solve."""
