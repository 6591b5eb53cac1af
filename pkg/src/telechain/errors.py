"""Error types shared across the node, engine, contracts and tooling.

Every error carries a short machine-readable ``code`` string; those codes are
part of the wire/CLI surface, the exception classes are not.
"""

from __future__ import annotations


class TelechainError(Exception):
    """Base class; ``code`` is a stable upper-snake identifier."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.message and self.message != self.code:
            return f"{self.code}: {self.message}"
        return self.code


class CanonicalError(TelechainError):
    """Malformed or non-canonical encoded value."""


class IdentityError(TelechainError):
    """Registry / certificate / signature failures."""


class LedgerError(TelechainError):
    """Block store and world-state violations."""


class ClientError(TelechainError):
    """Client-side pipeline failure; the proposal never reached the chain."""


class ContractError(TelechainError):
    """Raised inside contract code; becomes a committed error response."""


class ScenarioError(TelechainError):
    """Scenario script parse or assertion failure."""

    def __init__(self, code: str, message: str = "", line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(code, message)
