"""Exception types shared across the package."""


class InvalidParameter(ValueError):
    """A caller-supplied parameter violates a documented precondition."""


class EvaluationError(ArithmeticError):
    """A defining function returned a non-finite value.

    The offending jet is kept on the exception so the failure can be replayed.
    """

    def __init__(self, message, jet=None):
        super().__init__(message)
        self.jet = jet


class ConvergenceDefect(RuntimeError):
    """An iteration that must converge hit its cap (an internal defect)."""
