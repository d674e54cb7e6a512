"""Exception types raised by qwgrid."""


class UsageError(ValueError):
    """Invalid arguments: odd grid side, out-of-range site, empty marked set, ..."""


class ResourceLimitError(RuntimeError):
    """Requested object is too large for a guarded code path (dense oracle)."""


class DegeneratePairError(ValueError):
    """Momentum pair with sin(theta) == 0; the coin eigenvector formulas are undefined."""


class PoleError(ArithmeticError):
    """Argument of a cotangent is numerically at a pole."""
