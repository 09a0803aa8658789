class InvalidArgumentError(ValueError):
    pass


class OutOfDomainError(ValueError):
    """Query point lies outside the background grid."""


class DegenerateGradientError(ArithmeticError):
    """Level-set gradient too small to define a normal."""


class EmptyDomainError(ValueError):
    """No background cell centre falls inside the domain."""


class DivergenceError(RuntimeError):
    pass
