"""Custom errors for tree edit distance learning."""

from __future__ import annotations

from typing import Any


class TedLearnError(Exception):
    """Tree edit distance learning error."""


class TreeParseError(TedLearnError):
    """Bracket notation could not be parsed."""

    def __init__(self, message: str, position: int) -> None:
        """Initialize class."""
        super().__init__(f"{message} at position {position}")
        self.position = position


class CostModelError(TedLearnError):
    """Cost model is misconfigured."""


class ContractViolationError(TedLearnError):
    """Arguments do not belong together."""


class EnumerationLimitError(TedLearnError):
    """Input too large for an exhaustive oracle."""


class DatasetError(TedLearnError):
    """Dataset or data file is invalid."""

    def __init__(self, message: str, line: int | None = None) -> None:
        """Initialize class."""
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line


class NumericalError(TedLearnError):
    """Loss or gradient became non-finite."""

    def __init__(self, message: str, state: dict[str, Any] | None = None) -> None:
        """Initialize class."""
        super().__init__(message)
        self.state = state or {}
