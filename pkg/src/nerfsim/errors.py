"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """An argument violates a documented precondition (maps to CLI exit code 1)."""
