"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical parameter lies outside its allowed domain."""


class DegeneracyError(ArithmeticError):
    """A numerical quantity is degenerate (zero signal, non-unique steady state, ...)."""

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} [at {point}]"
        super().__init__(message)
        self.point = point
