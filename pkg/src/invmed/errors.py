"""Exception types raised across the package."""


class InvmedError(Exception):
    """Base class for all package errors."""


class DomainError(InvmedError, ValueError):
    """Argument outside the domain where a function is defined."""


class IncompatibleGridError(InvmedError, ValueError):
    pass


class SupportViolationError(InvmedError, ValueError):
    """A scatterer or shape reaches outside its allowed support region."""


class DegenerateInputError(InvmedError, ValueError):
    pass


class LayoutError(InvmedError, ValueError):
    pass


class ConfigError(InvmedError, ValueError):
    pass


class FieldFormatError(InvmedError, ValueError):
    pass


class SolverError(InvmedError, RuntimeError):
    """Sparse factorization or solve failed."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class DegenerateStartError(InvmedError, RuntimeError):
    """The very first line search of an optimization run failed."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
