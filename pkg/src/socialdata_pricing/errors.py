"""Exception and warning types shared across the package."""

from __future__ import annotations


class PricingError(Exception):
    """Base class for model and input errors.

    The CLI maps every subclass to exit code 1 and reports ``category``.
    """

    @property
    def category(self) -> str:
        return type(self).__name__


class SingularMatrix(PricingError, ArithmeticError):
    pass


class InvalidProbability(PricingError, ValueError):
    pass


class ParseError(PricingError, ValueError):
    def __init__(self, line_number: int, line: str, reason: str = "malformed line"):
        self.line_number = line_number
        self.line = line
        super().__init__(f"line {line_number}: {reason}: {line!r}")


class TooFewVertices(PricingError, ValueError):
    pass


class NegativeDemand(PricingError, ValueError):
    pass


class AsymmetricTies(PricingError, ValueError):
    pass


class InvalidPosition(PricingError, ValueError):
    pass


class NotHomogeneous(PricingError, ValueError):
    pass


class IndexOutOfRange(PricingError, IndexError):
    pass


class AssumptionUnsatisfiable(PricingError, RuntimeError):
    pass


class AssumptionViolated(PricingError, ValueError):
    """Raised by single-instance entry points when the bounded-demand condition fails."""


class DominanceViolation(PricingError, AssertionError):
    """A retained experiment run broke the dynamic-vs-static ordering."""


class NonConvergenceWarning(RuntimeWarning):
    pass


class NegativeDemandWarning(RuntimeWarning):
    pass
