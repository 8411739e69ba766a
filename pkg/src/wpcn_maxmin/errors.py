"""Exception types shared across the solver modules."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap before reaching tolerance.

    ``best`` carries the best iterate found so far (type depends on the
    routine), ``gap`` the residual/duality gap at that iterate when known.
    """

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


class InfeasibleError(RuntimeError):
    """A feasibility-driven solve found the requested target unattainable."""


class RankError(ValueError):
    """A matrix did not have the rank required by the operation."""

    def __init__(self, message, detected_rank=None):
        super().__init__(message)
        self.detected_rank = detected_rank
