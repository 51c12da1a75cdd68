"""Exception types raised by the library."""


class StochordError(Exception):
    """Base class for library errors."""


class InvalidDistribution(StochordError, ValueError):
    """Parameters or JSON spec do not describe a valid distribution."""


class DensityUndefined(StochordError):
    pass


class HazardUndefined(StochordError):
    pass


class MomentDiverges(StochordError):
    pass


class NotNonnegative(StochordError, ValueError):
    """An operand has probability mass below zero where nonnegativity is required."""


class NegativeScaler(NotNonnegative):
    pass


class NotIncreasing(StochordError, ValueError):
    pass


class DerivativeUnstable(StochordError, ArithmeticError):
    pass
