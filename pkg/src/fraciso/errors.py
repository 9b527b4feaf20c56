"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a hypothesis required by the operation.

    ``failures`` lists every violated condition, not just the first one.
    """

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures) if failures else [message]


class DegenerateFamilyError(PreconditionError):
    """A function family carries no information for a regression fit."""
