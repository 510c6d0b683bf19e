"""Exception hierarchy for the teleportation simulator."""

from typing import Optional

# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_ORACLE_SCOPE = 3
EXIT_IO = 4


class TeleportError(Exception):
    """Base class for all simulator errors."""


class DomainError(TeleportError, ValueError):
    """A physical parameter lies outside its allowed range."""


class UncertaintyViolationError(DomainError):
    """An optical source would violate V+ V- >= 1."""


class UndefinedTransferError(DomainError):
    """Signal transfer requested for an input without coherent amplitude."""


class UsageError(TeleportError):
    """An operation was applied to values it does not accept."""


class OracleScopeError(UsageError):
    """The closed-form oracle was called outside the configurations it covers."""


class ModelViolationError(TeleportError):
    """Inputs are inconsistent with the linear teleporter model."""


class SweepError(TeleportError):
    """A parameter sweep grid is empty or malformed."""


class ConfigValidationError(TeleportError):
    """A run document failed validation.

    Args:
        message: Summary message
        errors: List of (field path, message) pairs
    """

    def __init__(self, message: str, errors: Optional[list[tuple[str, str]]] = None):
        self.errors = errors or []
        if self.errors:
            details = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
            message = f"{message}: {details}"
        super().__init__(message)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, (ConfigValidationError, SweepError)):
        return EXIT_CONFIG
    if isinstance(exc, OracleScopeError):
        return EXIT_ORACLE_SCOPE
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_FAILURE
