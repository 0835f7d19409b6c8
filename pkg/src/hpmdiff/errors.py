"""Exception types raised by the solver stack."""


class HpmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(HpmError, ValueError):
    pass


class DegenerateDenominatorError(HpmError, ArithmeticError):
    """A series denominator has a constant term too close to zero."""


class SeriesBlowupError(HpmError, ArithmeticError):
    def __init__(self, degree, message=None):
        self.degree = degree
        super().__init__(message or f"non-finite value in series coefficient of degree {degree}")


class MaxRestartsExceeded(HpmError, RuntimeError):
    pass


class UnstableStepError(HpmError, ArithmeticError):
    """The explicit finite-difference baseline left its stability region."""


class ImageFormatError(HpmError, ValueError):
    pass
