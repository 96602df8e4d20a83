"""Exception hierarchy.

Errors fall into three families that the CLI maps onto exit codes:
input problems (2), estimator identification conditions that were not met
(3), and numerical degeneracy (4).
"""


class CrossMomentError(Exception):
    """Base class for every error raised by this package."""


class InputError(CrossMomentError, ValueError):
    """Malformed or inadmissible input."""


class InvalidInput(InputError):
    pass


class InvalidParams(InputError):
    pass


class Unsupported(InputError):
    pass


class InvalidDelta(InputError):
    pass


class SchemaError(InputError):
    pass


class EmptyDataset(InputError):
    pass


class ConditionError(CrossMomentError):
    """An identification condition could not be established from the data."""


class ConditionNotDetected(ConditionError):
    """No moment order up to ``n_max`` departs detectably from the Gaussian recursion."""


class SignUndetermined(ConditionError):
    """E[DZ] is too close to zero to fix the sign of the ratio."""


class ProxyUnusable(ConditionError):
    """A proxy failed in more than half of the bootstrap resamples."""

    def __init__(self, message, proxy=None):
        super().__init__(message)
        self.proxy = proxy


class DegeneracyError(CrossMomentError, ArithmeticError):
    """A quantity that must be bounded away from zero was not."""


class DegenerateDenominator(DegeneracyError):
    pass


class SingularDesign(DegeneracyError):
    pass


class ConstructionFailed(DegeneracyError):
    pass
