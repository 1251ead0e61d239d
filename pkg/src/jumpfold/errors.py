"""Exception hierarchy.

Every error carries a machine-readable ``payload`` so the CLI can emit a
structured record instead of bare text.
"""

from __future__ import annotations

from typing import Any


class JumpfoldError(Exception):
    """Base class. ``exit_code`` follows the CLI convention (2 validation, 3 numerical)."""

    exit_code = 3

    def __init__(self, message: str, **payload: Any):
        super().__init__(message)
        self.payload = payload

    def to_record(self) -> dict[str, Any]:
        return {"type": type(self).__name__, "message": str(self), "payload": self.payload}


class InvalidInput(JumpfoldError):
    exit_code = 2


class DomainError(JumpfoldError):
    """Point outside the admissible domain of a family."""


class ChartError(DomainError):
    """Fiber chart breaks down at the requested fiber point."""


class BranchError(DomainError):
    """Root collision in the Eguchi-Hanson branch structure."""


class PreconditionError(JumpfoldError):
    """Operation called at a point where it is not defined (e.g. no divisor)."""


class GenericityError(JumpfoldError):
    pass


class BundleRankError(JumpfoldError):
    pass


class TransferError(JumpfoldError):
    pass


class NoJumpOnPath(JumpfoldError):
    pass


class DegenerateDivisor(JumpfoldError):
    pass


class SingularAlpha(JumpfoldError):
    pass


class IllConditioned(JumpfoldError):
    pass


class FitError(JumpfoldError):
    pass


class ResidueUnstable(JumpfoldError):
    pass
