class ShapeError(ValueError):
    """Array dimensions do not line up."""


class DomainError(ValueError):
    """A formula is evaluated outside the set where it is defined."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    ``partial`` carries whatever the solver had computed when it gave up.
    """

    def __init__(self, message, partial=None, iterations=None):
        super().__init__(message)
        self.partial = partial
        self.iterations = iterations


class NotCertifiedError(RuntimeError):
    """Raised when an operation requires a contractive certificate."""
