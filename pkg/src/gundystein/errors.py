from __future__ import annotations


class GundySteinError(Exception):
    """Base class for all library errors."""


class FiltrationError(GundySteinError, ValueError):
    """A filtration or instance file violates a structural invariant.

    ``code`` is a stable machine-readable identifier; ``line`` is the
    1-based line of the offending record when the input came from a file.
    """

    def __init__(self, code: str, message: str, line: int | None = None):
        self.code = code
        self.message = message
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message} [{code}]")


class MeasurabilityError(GundySteinError, ValueError):
    """A stopping time splits an atom at its own level."""


class DomainError(GundySteinError, ValueError):
    """An argument is outside the operation's domain (e.g. lambda <= 0)."""
