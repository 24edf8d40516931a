"""Exception types raised across the package."""


class IrsParafacError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(IrsParafacError, ValueError):
    pass


class ColumnMismatch(DimMismatch):
    pass


class LengthMismatch(DimMismatch):
    pass


class InvalidMode(IrsParafacError, ValueError):
    pass


class IndexOutOfRange(IrsParafacError, IndexError):
    pass


class SvdFailure(IrsParafacError, ArithmeticError):
    pass


class NonFactorableArray(IrsParafacError, ValueError):
    pass


class NotPowerOfTwo(IrsParafacError, ValueError):
    pass


class QExceedsT(IrsParafacError, ValueError):
    pass


class NExceedsT(IrsParafacError, ValueError):
    pass


class IdentifiabilityError(IrsParafacError, ValueError):
    """A dimension setting leaves one of the LS problems underdetermined."""


class ZeroReference(IrsParafacError, ZeroDivisionError):
    pass


class ConfigError(IrsParafacError, ValueError):
    pass
