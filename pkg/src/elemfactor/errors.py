"""Exception hierarchy shared by every module of the package."""


class FactorizationError(Exception):
    """Base class for all errors raised by elemfactor."""


class ConfigMismatch(FactorizationError, ValueError):
    pass


class NotInvertible(FactorizationError, ArithmeticError):
    """A series could not be certified invertible in the Wiener algebra."""


class NotNearIdentity(FactorizationError, ValueError):
    pass


class NearIdentityDiverged(FactorizationError, ArithmeticError):
    """An elimination pivot drifted too far from 1 to be inverted by a Neumann series."""


class DimensionTooLarge(FactorizationError, ValueError):
    pass


class DivisionByZero(FactorizationError, ZeroDivisionError):
    pass


class NotUnimodular(FactorizationError, ValueError):
    """The input matrix does not have determinant 1 within tolerance."""


class PivotBreakdown(FactorizationError, ArithmeticError):
    pass


class NotInvertibleDiagonal(FactorizationError, ArithmeticError):
    pass


class Unreachable(FactorizationError, ValueError):
    pass


class InverseUnavailable(FactorizationError, ArithmeticError):
    pass


class Unsupported(FactorizationError):
    """The requested factorization has no constructive route in this package."""


class MergeOverflow(FactorizationError, AssertionError):
    pass


class SchemaError(FactorizationError, ValueError):
    """Malformed JSON input; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
