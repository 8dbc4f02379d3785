"""
services/levy/errors.py
-----------------------
Typed failures for the numerical library.

Every error carries a ``kind`` the CLI maps onto an exit code:
  "domain" / "shape" / "degree" / "degenerate" / "branch"  → 2 (validation)
  "convergence" / "resolution" / "budget"                   → 3 (numerical)
"""

from __future__ import annotations

from typing import Optional

VALIDATION_KINDS = frozenset({"domain", "shape", "degree", "degenerate", "branch"})
NUMERICAL_KINDS = frozenset({"convergence", "resolution", "budget"})


class LevyLabError(Exception):
    """Base failure with a discriminating ``kind``."""

    kind = "unknown"

    def __init__(self, message: str = "") -> None:
        self.message = message
        super().__init__(f"{self.kind}: {message}" if message else self.kind)

    @property
    def is_validation(self) -> bool:
        return self.kind in VALIDATION_KINDS


class DomainError(LevyLabError, ValueError):
    kind = "domain"


class ShapeError(LevyLabError, ValueError):
    kind = "shape"


class DegreeError(LevyLabError, ValueError):
    kind = "degree"


class DegenerateError(LevyLabError, ZeroDivisionError):
    kind = "degenerate"


class BranchError(LevyLabError, ValueError):
    kind = "branch"


class ConvergenceError(LevyLabError, ArithmeticError):
    """Budget exhausted before the tolerance was met.

    ``estimate`` and ``error_estimate`` hold the partial result; ``worst_index``
    names the worst component for vector-valued integrals.
    """

    kind = "convergence"

    def __init__(
        self,
        message: str = "",
        *,
        estimate: object = None,
        error_estimate: Optional[float] = None,
        worst_index: Optional[int] = None,
    ) -> None:
        self.estimate = estimate
        self.error_estimate = error_estimate
        self.worst_index = worst_index
        super().__init__(message)


class ResolutionError(LevyLabError, ArithmeticError):
    kind = "resolution"


class BudgetError(LevyLabError, ArithmeticError):
    kind = "budget"


def require(condition: bool, message: str, error: type[LevyLabError] = DomainError) -> None:
    """Raise ``error(message)`` unless ``condition`` holds."""
    if not condition:
        raise error(message)
