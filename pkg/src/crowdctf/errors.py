"""Error hierarchy shared by every layer.

Each error carries a stable machine-readable ``code`` that the HTTP layer
maps straight into the error body, so clients can branch on codes instead
of parsing messages.
"""

from __future__ import annotations

from typing import Any


class PlatformError(Exception):
    code = "ERROR"
    http_status = 400

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class ValidationError(PlatformError):
    code = "VALIDATION"
    http_status = 422


class NotFoundError(PlatformError):
    code = "NOT_FOUND"
    http_status = 404


class StateError(PlatformError):
    """Operation not legal in the entity's current lifecycle state."""

    code = "STATE"
    http_status = 409


class ConflictError(PlatformError):
    """Duplicate or already-performed action (double judgment, double grant)."""

    code = "CONFLICT"
    http_status = 409


class DuplicateEvidenceError(ConflictError):
    """Same source URL already documented in this event; details carry the id."""

    code = "DUPLICATE_EVIDENCE"


class AuthenticationError(PlatformError):
    code = "AUTH"
    http_status = 401


class AuthorizationError(PlatformError):
    code = "FORBIDDEN"
    http_status = 403


class OwnTeamError(AuthorizationError):
    """Judge may not act on their own team's flags or evidence."""

    code = "OWN_TEAM"


class GateError(PlatformError):
    """Reporting flag approval blocked; details list the missing kinds."""

    code = "GATE_UNMET"
    http_status = 409


class StoreCorruptError(PlatformError):
    """Persisted store failed an integrity check; refuse to load."""

    code = "STORE_CORRUPT"
    http_status = 500
