"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class GTRError(Exception):
    """Base class for all errors raised by ``gtr_bloch``."""


class DomainError(GTRError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConstructionError(GTRError, ValueError):
    """A value object could not be built from the given data.

    ``field`` names the offending constructor argument when there is one.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message)


class MissingContextError(GTRError, LookupError):
    """A conditional density required by a computation is not defined."""

    def __init__(self, measurement_id: str, context: str, message: str | None = None):
        self.measurement_id = measurement_id
        self.context = context
        if message is None:
            message = f"measurement {measurement_id!r} has no density for context {context!r}"
        super().__init__(message)

    def __str__(self) -> str:
        return self.args[0]


class StructuralError(GTRError, ValueError):
    """Inputs are individually valid but do not fit together."""


class ValidationError(GTRError, ValueError):
    """A JSON document failed validation; ``path`` points at the offending node."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
