"""Shared exception types."""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class FormatError(ValidationError):
    """An on-disk payload is malformed or uses an unsupported variant."""
