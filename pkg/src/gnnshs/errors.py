"""Exception types raised across the package."""

from __future__ import annotations


class InvalidEdgeError(ValueError):
    """Self-loop or out-of-range endpoint."""


class InvalidPairError(ValueError):
    pass


class InvalidKError(ValueError):
    pass


class ConfigError(ValueError):
    """Infeasible or inconsistent configuration values."""


class ShapeError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(ArithmeticError):
    """A non-finite value appeared in a forward pass or training loss."""

    def __init__(self, message: str, *, layer: int | None = None, epoch: int | None = None) -> None:
        super().__init__(message)
        self.layer = layer
        self.epoch = epoch
