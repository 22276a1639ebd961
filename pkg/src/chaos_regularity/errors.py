"""Exception hierarchy shared by the library, the pipeline and the CLI."""

from __future__ import annotations

from typing import Optional


class ChaosRegularityError(Exception):
    """Base class for every error raised by this package."""


class InputError(ChaosRegularityError, ValueError):
    """Malformed profile, spec or parameter supplied by the caller."""


class DomainError(ChaosRegularityError, ValueError):
    """Argument outside the domain of an operation."""


class SingularityError(DomainError):
    """Degenerate increment: a covariance norm vanishes where it may not."""


class ConsistencyError(ChaosRegularityError):
    """The chaos-norm route and the lambda-criterion route disagree."""


class AccuracyError(ChaosRegularityError):
    """A series or quadrature refinement did not reach its tolerance.

    Attributes:
        best_estimate: The last value computed before giving up.
        error_estimate: The error estimate attached to ``best_estimate``.
    """

    def __init__(
        self,
        message: str,
        *,
        best_estimate: Optional[float] = None,
        error_estimate: Optional[float] = None,
    ) -> None:
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
