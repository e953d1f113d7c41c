"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    Attributes
    ----------
    best_state : object
        Best iterate found (a ``SubordinationState`` for the subordination
        solver, a complex number for scalar fixed points).
    lam, y : float or None
        Real and imaginary part of the spectral point where the iteration
        failed, when known.
    """

    def __init__(self, message, best_state=None, lam=None, y=None):
        super().__init__(message)
        self.best_state = best_state
        self.lam = lam
        self.y = y
