"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input data (shapes, flags, instance files)."""


class StructuralError(ValidationError):
    """Inputs are structurally incompatible (shape/backend mismatch)."""


class DomainError(ValueError):
    """A scalar function was evaluated outside its domain."""


class PreconditionError(ValueError):
    """A documented precondition of an operation was violated."""


class SingularityError(ArithmeticError):
    """A solve hit the kernel of a positive operator (signals value = +inf)."""


class PositivityViolationError(ArithmeticError):
    """An evolved density acquired a significantly negative eigenvalue."""


class NonConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget; carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
