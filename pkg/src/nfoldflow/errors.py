"""Exceptions shared across the package."""


class NFoldFlowError(Exception):
    """Base class for package errors."""


class BudgetExceededError(NFoldFlowError):
    """A configured resource cap (elements, time, steps) was hit.

    Deliberately distinct from any empty/infeasible result: exceeding a
    budget never silently truncates output.
    """


class InputError(NFoldFlowError):
    """Malformed instance data (parse or validation failure)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class OracleEvaluationError(NFoldFlowError):
    """An objective containing oracle terms was asked for its exact value."""


class KernelOverflow(NFoldFlowError):
    """Internal: the int64 fast path would overflow; retry in pure Python."""
