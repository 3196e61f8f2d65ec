"""
Exception types shared across the toolkit.
"""


class InputError(ValueError):
    """Invalid user input: parameters, files or indices."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class CapacityError(InputError):
    """Instance or LP exceeds a configured enumeration limit."""


class DegenerateInstanceError(InputError):
    """N < M + 2, so there is no chunking P >= 1 to work with."""


class WitnessMismatchError(InputError):
    """A witness member is not a constraint subset of the LP it is checked against."""


class ClosedFormRegimeError(RuntimeError):
    """A closed-form schedule came out with a negative component."""

    def __init__(self, message: str, values: list | None = None):
        super().__init__(message)
        self.values = values
