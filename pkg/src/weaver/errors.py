"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP layer and
the CLI can map failures without string matching.
"""
from __future__ import annotations


class WeaverError(Exception):
    """Base class for all package errors."""

    code = "error"


class CatalogError(WeaverError):
    """Unknown relation name, or a template missing its placeholders."""

    code = "unknown-relation"


class DuplicateConceptError(WeaverError):
    """A label normalizes to a norm that already exists in the KB."""

    code = "duplicate-concept"


class InvalidTargetError(WeaverError):
    """Operation aimed at a node that cannot accept it (e.g. removing the root)."""

    code = "invalid-target"


class BudgetExceededError(WeaverError):
    """The KB is already at its node budget."""

    code = "budget-exceeded"


class UnknownNodeError(WeaverError):
    code = "unknown-node"


class UnknownSessionError(WeaverError):
    code = "unknown-session"


class ExpansionError(WeaverError):
    """Every relation in an expansion failed; nothing was added."""

    code = "expansion-failed"


class GenerationError(WeaverError):
    """Knowledge-base generation could not produce a first layer."""

    code = "generation-failed"


class TransientBackendError(WeaverError):
    """Retryable backend failure: timeouts, connection drops, 429/5xx."""

    code = "transient-backend"

    def __init__(self, message: str, *, status: int | None = None):
        super().__init__(message)
        self.status = status


class ProviderUnavailableError(WeaverError):
    """Backend kept failing after the retry budget was spent."""

    code = "provider-unavailable"

    def __init__(self, message: str, *, status: int | None = None,
                 last_error: BaseException | None = None):
        super().__init__(message)
        self.status = status
        self.last_error = last_error


class ProtocolError(WeaverError):
    """Backend answered, but not in the shape the wire protocol promises."""

    code = "protocol-error"


class CapabilityError(WeaverError):
    """Provider configured against a backend that lacks a required feature."""

    code = "capability-missing"


class InstanceTooLargeError(WeaverError):
    """Exact search refused: the instance is past its combinatorial guard."""

    code = "instance-too-large"


class IncompleteSampleError(WeaverError):
    """A precision sample still has unlabeled edges."""

    code = "incomplete-sample"
