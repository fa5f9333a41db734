"""
Exception hierarchy.
"""
from typing import Optional


class FakespanError(Exception):
    """Base class for all package errors."""


class ContractViolation(FakespanError, ValueError):
    """A shape or precondition contract was broken by the caller."""


class ConfigError(FakespanError, ValueError):
    """Invalid or inconsistent configuration."""


class NonFiniteError(FakespanError, FloatingPointError):
    """A loss or gradient became NaN/inf."""


class FormatError(FakespanError, ValueError):
    """Malformed binary file (bad magic, version or truncation)."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        offset: Optional[int] = None,
        missing: Optional[int] = None,
    ):
        self.path = path
        self.offset = offset
        self.missing = missing
        details = []
        if path is not None:
            details.append(f"path={path}")
        if offset is not None:
            details.append(f"offset={offset}")
        if missing is not None:
            details.append(f"missing {missing} bytes")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
