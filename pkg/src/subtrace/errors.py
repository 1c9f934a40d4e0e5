"""Exception types shared across the package."""

from __future__ import annotations


class SubtraceError(Exception):
    """Base class for every error raised by this package."""


class SpecParseError(SubtraceError, ValueError):
    """A manifold or Bernstein spec string could not be parsed.

    ``position`` is the 0-based column of the offending character, so the
    message can point a caret at it.
    """

    def __init__(self, message: str, text: str, position: int = 0) -> None:
        self.text = text
        self.position = max(0, min(position, len(text)))
        self.reason = message
        pointer = " " * self.position + "^"
        super().__init__(f"{message} (column {self.position})\n  {text}\n  {pointer}")


class ResourceExceeded(SubtraceError):
    """The requested cutoff would exceed the configured enumeration budget."""


class DivergentTrace(SubtraceError):
    """The tail of the trace series cannot be bounded: the series is not summable."""


class DomainError(SubtraceError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(SubtraceError):
    """Adaptive quadrature hit its subdivision cap without reaching tolerance."""

    def __init__(self, message: str, partial: float, residual: float) -> None:
        self.partial = partial
        self.residual = residual
        super().__init__(f"{message}: partial={partial!r}, residual estimate={residual!r}")
