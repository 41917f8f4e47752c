"""Exception hierarchy shared by all regnmf modules."""


class RegNMFError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(RegNMFError, ValueError):
    """Operands have incompatible dimensions."""


class ZeroDivisorError(RegNMFError, ZeroDivisionError):
    """Elementwise division hit a (near) zero divisor."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CapacityError(RegNMFError, MemoryError):
    """A requested object would exceed the configured size limit."""


class ValidationError(RegNMFError, ValueError):
    """Input violates a documented precondition."""


class DegenerateDenominatorError(RegNMFError, ArithmeticError):
    """A multiplicative update met a zero denominator with nonzero numerator."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnboundedDescentError(RegNMFError, ArithmeticError):
    """Both the feasible and the optimal step length are infinite."""


class NumericError(RegNMFError, ArithmeticError):
    """Non-finite values appeared during iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UndefinedMetricError(RegNMFError, ValueError):
    """A metric is undefined for the given input (e.g. zero baseline variance)."""


class ParseError(RegNMFError, ValueError):
    """A matrix file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
