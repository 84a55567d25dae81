"""Shared error base class.

Every domain error in the package derives from Error and carries a short
machine-readable code used by the CLI exit-status mapping and the HTTP API
error envelope.
"""

from __future__ import annotations


class Error(Exception):
    """Base class for all swigcheck domain errors."""

    code = "error"

    def payload(self) -> dict:
        """JSON-ready representation used by the API and --json output."""
        return {"code": self.code, "message": str(self)}
