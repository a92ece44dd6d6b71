"""Exception hierarchy. The CLI maps these onto exit codes."""


class TacgapError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(TacgapError, ValueError):
    """Invalid argument, out-of-envelope parameter or malformed input."""


class DomainError(ParameterError):
    """Non-finite input to a special function."""


class DomainModelError(ParameterError):
    """Interval pieces overlap or are out of order."""


class AccuracyError(TacgapError, ArithmeticError):
    """A numerical procedure could not reach its accuracy target."""


class DegenerateDeterminantError(AccuracyError):
    pass


class EvaluationError(AccuracyError):
    """A kernel produced a non-finite sample."""


class ResolventError(AccuracyError):
    """``Id - K`` is numerically singular, so the gap probability is ~0."""


class ConditioningError(AccuracyError):
    pass


class InsufficientDataError(AccuracyError):
    pass
