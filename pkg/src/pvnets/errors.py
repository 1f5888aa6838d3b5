"""Exception types shared across the toolkit."""

from __future__ import annotations


class PvError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PvError, ValueError):
    """An operation was applied outside its domain (negative counts, unknown states, ...)."""


class NotEnabledError(DomainError):
    """A step label is well formed but cannot fire from the given configuration."""


class InvalidLabelError(DomainError):
    """A step label is malformed for the model (letter mismatch, wrong transition kind)."""


class ResourceError(PvError, RuntimeError):
    """An enumeration exceeded its configured cap."""
