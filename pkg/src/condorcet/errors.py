"""Exception hierarchy shared by every module of the package."""


class CondorcetError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CondorcetError, ValueError):
    """An argument is outside the domain an operation accepts."""


class InvalidQueryError(CondorcetError, ValueError):
    """A duel was requested between an arm and itself or a nonexistent arm."""


class InvalidSparsityError(InvalidParameterError):
    """A sparsity vector has an entry outside ``1 <= s_i <= K_{i;<0}``."""


class NoCondorcetWinnerError(CondorcetError):
    """The gap matrix has no strict Condorcet winner."""


class DegenerateInstanceError(CondorcetError):
    """A suboptimal row has no strictly negative entry."""


class UnderbudgetError(InvalidParameterError):
    """The fixed budget is below the range where the procedure is meaningful."""


class NonterminationError(CondorcetError):
    """A doubling schedule hit its stage cap without certifying an arm.

    The partial trace is kept on ``stages`` so callers can report it.
    """

    def __init__(self, message, stages=None, budget_used=0):
        super().__init__(message)
        self.stages = list(stages or [])
        self.budget_used = budget_used
