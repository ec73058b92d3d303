"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs or violated preconditions
(CLI exit code 1) and ``NumericalBudgetError`` for computations that ran out
of resolution, range or accuracy (CLI exit code 2).
"""


class FracmixError(Exception):
    """Base class for all package errors."""


class ValidationError(FracmixError, ValueError):
    pass


class NumericalBudgetError(FracmixError, ArithmeticError):
    pass


class ConfigurationError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class PreconditionError(ValidationError):
    def __init__(self, message, factor_index=None):
        super().__init__(message)
        self.factor_index = factor_index


class OrderingError(ValidationError):
    pass


class DegenerateGapError(ValidationError):
    pass


class ConstructionError(ValidationError):
    pass


class CapacityError(NumericalBudgetError):
    pass


class ResolutionError(NumericalBudgetError):
    pass


class AliasingError(NumericalBudgetError):
    """Raised when a flow pushes more mass past the grid than the budget allows.

    ``last_reliable`` carries the last time parameter that stayed in budget,
    when known.
    """

    def __init__(self, message, loss=None, last_reliable=None):
        super().__init__(message)
        self.loss = loss
        self.last_reliable = last_reliable


class AccuracyError(NumericalBudgetError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class RangeError(NumericalBudgetError):
    pass


class FitError(NumericalBudgetError):
    pass


class DivergenceError(NumericalBudgetError):
    """A factor solve diverged; the offending report is attached."""

    def __init__(self, message, report=None, factor_index=None):
        super().__init__(message)
        self.report = report
        self.factor_index = factor_index
