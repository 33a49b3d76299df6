"""Exception hierarchy shared by all modules.

Every error carries a machine-readable ``kind`` (the class name) and a
``details`` mapping so the CLI can emit structured JSON diagnostics.
"""


class SSFourierError(Exception):
    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    @property
    def kind(self):
        return type(self).__name__

    def to_dict(self):
        return {"error": self.kind, "message": str(self), **self.details}


class IfsValidationError(SSFourierError, ValueError):
    """Raised when a raw map list does not describe a usable IFS."""


class TooFewMapsError(IfsValidationError):
    pass


class RatioRangeError(IfsValidationError):
    pass


class WeightRangeError(IfsValidationError):
    pass


class WeightSumError(IfsValidationError):
    pass


class SingletonError(IfsValidationError):
    pass


class EmptyWordError(SSFourierError, ValueError):
    pass


class ExplosionError(SSFourierError, RuntimeError):
    """An exact enumeration would exceed its configured size cap."""


class ToleranceError(SSFourierError, ValueError):
    pass


class UnequalRatioError(SSFourierError, ValueError):
    pass


class LatticeResonanceError(SSFourierError, ArithmeticError):
    pass


class InsufficientBandsError(SSFourierError, ValueError):
    pass


class RationalInputError(SSFourierError, ValueError):
    pass


class NonMonicError(SSFourierError, ValueError):
    pass
