"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """Inputs have the wrong shape or violate an operation's preconditions."""


class DomainError(ValueError):
    """A quantity is undefined at the requested point (e.g. at the origin)."""


class OutsideSupportError(DomainError):
    """The requested (xi, tau) lies outside the support of the convolution."""


class ConfigurationError(ValueError):
    """A numerical configuration (box size, grid, tolerance) is unusable."""


class ConvergenceError(ArithmeticError):
    """An iterative method did not reach its tolerance.

    ``best`` carries the best estimate available when the iteration stopped.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
