"""Exception hierarchy shared by all werate modules."""


class WerateError(Exception):
    """Base class for all errors raised by this package."""


class ModelValidationError(WerateError, ValueError):
    """An input model/config violates its documented invariants."""


class InfiniteInformationError(WerateError, ArithmeticError):
    """A zero-probability outcome carries nonzero weight, so the
    weighted information is infinite.  Raised instead of returning inf."""


class EnumerationLimitError(WerateError, ValueError):
    """A brute-force enumeration would exceed the hard size guard."""


class ConvergenceError(WerateError, RuntimeError):
    """An iterative solver (power iteration, quadrature refinement)
    failed to converge within its budget."""


class DoeblinError(WerateError, RuntimeError):
    """No iterate of the kernel is strictly positive, so geometric
    mixing bounds are unavailable."""
