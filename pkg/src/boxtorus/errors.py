"""Exception types raised by boxtorus."""


class BoxtorusError(ValueError):
    """Base class for all domain errors in the package."""


class TruncationError(BoxtorusError):
    """A grid is too coarse for the requested truncation radius, or a
    coefficient table carries modes outside its radius."""


class RealnessError(BoxtorusError):
    """Coefficients are not conjugate-symmetric, so the field is not real."""


class DomainError(BoxtorusError):
    """An argument lies outside the domain of the operation."""


class CharacteristicDataError(DomainError):
    """Nonzero data on a characteristic (kernel) mode where none is allowed."""


class NonConvergenceError(RuntimeError):
    """Newton iteration hit its cap.

    The best iterate seen and its residual norm are kept on the exception so
    callers can inspect or restart from them.
    """

    def __init__(self, message, best=None, residual_norm=float("nan"), iterations=0):
        super().__init__(message)
        self.best = best
        self.residual_norm = residual_norm
        self.iterations = iterations
