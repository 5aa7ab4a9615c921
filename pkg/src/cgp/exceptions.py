"""Exception hierarchy shared by all modules."""


class CGPError(Exception):
    """Base class for errors raised by this package."""


class KernelTooRoughError(CGPError, ValueError):
    """The covariance family is not smooth enough for the requested derivative."""


class ModelBuildError(CGPError, ValueError):
    """Design data, grid size or constraint parameters are inconsistent."""


class DataConflictError(ModelBuildError):
    """The observations themselves violate the requested constraint."""


class InfeasibleError(CGPError):
    """The interpolation equalities and the inequality constraints have no common point."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class IterationLimitError(CGPError):
    """The active-set solver hit its iteration cap."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class RankDeficientError(CGPError, ArithmeticError):
    """The equality system is rank deficient or numerically singular."""


class LowAcceptanceError(CGPError):
    """Rejection sampling accepted too few proposals; use the Gibbs sampler instead."""

    def __init__(self, message, acceptance_rate=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
