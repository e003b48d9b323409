"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: usage errors exit 1,
resource-limit errors exit 2, detected invariant violations exit 3.
"""

from __future__ import annotations


class BraidhomError(Exception):
    """Base class for package errors."""


class UsageError(BraidhomError):
    """Bad user input (malformed braid text, invalid configuration)."""


class ResourceLimitError(BraidhomError):
    """A computation exceeded a configured size or recursion bound."""


class InvariantViolationError(BraidhomError):
    """An internal structural identity failed (signals a construction bug)."""
