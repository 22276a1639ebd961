"""Membership tests for the fractional Sobolev scale ``D^{alpha,2}``.

Two routes decide membership and must agree:

* the chaos norm ``sum_n w(n, alpha) b_n`` with polynomial weights, and
* the lambda-domain criterion ``sum_n W(n, beta) b_n`` obtained by applying
  the order-``beta`` Riemann-Liouville operator to ``B(lam)`` and letting
  ``lam -> 1``.

Both weights grow like ``n**alpha``, so for the tail model
``C rho**(2n) n**(-p)`` the decision is analytic: every order is admissible
when ``rho < 1``, none when ``rho > 1``, and exactly ``alpha < p - 1`` when
``rho = 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_serializer, field_validator

from chaos_regularity.chaos_core import (
    DEFAULT_TOLERANCE,
    ChaosProfile,
    GeometricPolynomial,
    LogWeight,
    SeriesValue,
    bs_norm_sq,
    convergence_radius,
    weighted_series,
)
from chaos_regularity.errors import ConsistencyError, DomainError, InputError
from chaos_regularity.fractional_calc import (
    FracOrder,
    apply_termwise,
    iterated_integral_quadrature,
    rl_derivative_quadrature,
    termwise_log_weight,
)
from chaos_regularity.quadrature import DEFAULT_TOL

logger = logging.getLogger(__name__)

BOUNDARY_WIDTH = 1e-9


class Decision(str, Enum):
    MEMBER = "member"
    NONMEMBER = "nonmember"


def sobolev_log_weight(alpha: float) -> LogWeight:
    """``log(1 + n**alpha)`` for ``alpha >= 0``, ``-log(1 + n**|alpha|)`` below; zero at ``n = 0``."""

    def log_weight(n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        out = np.zeros_like(n)
        pos = n > 0.0
        out[pos] = np.logaddexp(0.0, abs(alpha) * np.log(n[pos]))
        return out if alpha >= 0.0 else -out

    return log_weight


def criterion_log_weight(beta: float) -> LogWeight:
    """Vectorized ``log W(n, beta)``; the constant chaos drops out for ``beta > 0``."""
    return termwise_log_weight(beta)


@dataclass(frozen=True)
class CriterionWeight:
    """``W(n, beta)``, the factor the order-``beta`` criterion puts on ``b_n``."""

    n: int
    beta: float

    @property
    def value(self) -> float:
        return float(np.exp(criterion_log_weight(self.beta)(np.array([float(self.n)]))[0]))


def sobolev_norm_sq(
    profile: ChaosProfile, alpha: float, *, tol: float = DEFAULT_TOLERANCE
) -> SeriesValue:
    """``||F||^2_{alpha,2} = sum_n w(n, alpha) b_n``."""
    return weighted_series(profile, sobolev_log_weight(alpha), growth=alpha, tol=tol)


def criterion_sum(profile: ChaosProfile, beta: float, *, tol: float = DEFAULT_TOLERANCE) -> SeriesValue:
    """The lambda-criterion of order ``beta`` in the limit ``lam -> 1``.

    Positive orders take the supremum over ``(0, 1)`` of the differentiated
    series, which by monotonicity is its value at 1; negative orders take the
    iterated and fractional integrals up to 1.
    """
    return weighted_series(profile, criterion_log_weight(beta), growth=beta, tol=tol)


def alpha_threshold(profile: ChaosProfile) -> float:
    """Critical order ``alpha*``; head coefficients never affect it."""
    if profile.is_finite_support:
        return math.inf
    tail = profile.tail
    assert isinstance(tail, GeometricPolynomial)
    if tail.rho < 1.0:
        return math.inf
    if tail.rho > 1.0:
        return -math.inf
    return tail.p - 1.0


def is_infinitely_differentiable(profile: ChaosProfile) -> bool:
    """True when ``B`` is finite past ``lam = 1``, which gives every ``D^{m,2}``."""
    return convergence_radius(profile).radius > 1.0


def _decide(alpha: float, alpha_star: float) -> Decision:
    return Decision.MEMBER if alpha < alpha_star else Decision.NONMEMBER


def _on_boundary(alpha: float, alpha_star: float) -> bool:
    """True when ``alpha`` sits on a finite critical order, which is itself excluded."""
    return math.isfinite(alpha_star) and abs(alpha - alpha_star) < BOUNDARY_WIDTH


@dataclass(frozen=True, kw_only=True)
class MembershipResult:
    """Decision for one order with the two sums it rests on."""

    alpha: float
    decision: Decision
    sobolev: SeriesValue
    criterion: SeriesValue
    boundary: bool = False

    @property
    def evidence(self) -> tuple[tuple[str, Union[float, str]], ...]:
        return (
            ("sobolev_norm_sq", "divergent" if self.sobolev.divergent else self.sobolev.value),
            ("criterion_sum", "divergent" if self.criterion.divergent else self.criterion.value),
        )


def membership(
    profile: ChaosProfile, alpha: float, *, tol: float = DEFAULT_TOLERANCE
) -> MembershipResult:
    """Decide ``F in D^{alpha,2}`` by both routes.

    Raises:
        ConsistencyError: The routes, or a route and the analytic threshold,
            disagree on finiteness.
    """
    sob = sobolev_norm_sq(profile, alpha, tol=tol)
    crit = criterion_sum(profile, alpha, tol=tol)
    if sob.finite != crit.finite:
        raise ConsistencyError(
            f"routes disagree at alpha={alpha}: sobolev finite={sob.finite}, "
            f"criterion finite={crit.finite}"
        )
    alpha_star = alpha_threshold(profile)
    decision = _decide(alpha, alpha_star)
    if (decision is Decision.MEMBER) != sob.finite:
        raise ConsistencyError(
            f"series finiteness {sob.finite} contradicts alpha*={alpha_star} at alpha={alpha}"
        )
    boundary = _on_boundary(alpha, alpha_star)
    logger.debug(
        "alpha=%r: %s (alpha*=%r, boundary=%s)", alpha, decision.value, alpha_star, boundary
    )
    return MembershipResult(
        alpha=alpha, decision=decision, sobolev=sob, criterion=crit, boundary=boundary
    )


def _encode_extended(value: float) -> Union[float, str]:
    if value == math.inf:
        return "+inf"
    if value == -math.inf:
        return "-inf"
    return value


def _decode_extended(value: Any) -> Any:
    if isinstance(value, str):
        table = {"+inf": math.inf, "inf": math.inf, "-inf": -math.inf}
        if value in table:
            return table[value]
    return value


class QueryRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float
    decision: Decision
    sobolev_sum: float
    criterion_sum: float
    boundary: bool = False

    @field_validator("sobolev_sum", "criterion_sum", mode="before")
    @classmethod
    def _load_extended(cls, value: Any) -> Any:
        return _decode_extended(value)

    @field_serializer("sobolev_sum", "criterion_sum")
    def _dump_extended(self, value: float) -> Union[float, str]:
        return _encode_extended(value)


class RegularityVerdict(BaseModel):
    """Critical order plus the decisions of every queried order."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha_star: float
    queries: tuple[QueryRecord, ...] = ()

    @field_validator("alpha_star", mode="before")
    @classmethod
    def _load_alpha_star(cls, value: Any) -> Any:
        return _decode_extended(value)

    @field_serializer("alpha_star")
    def _dump_alpha_star(self, value: float) -> Union[float, str]:
        return _encode_extended(value)

    def member(self, alpha: float) -> Decision:
        for query in self.queries:
            if query.alpha == alpha:
                return query.decision
        return _decide(alpha, self.alpha_star)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: Union[str, bytes]) -> RegularityVerdict:
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            raise InputError(f"invalid verdict document: {exc}") from exc


def classify(
    profile: ChaosProfile, alphas: Iterable[float], *, tol: float = DEFAULT_TOLERANCE
) -> RegularityVerdict:
    """Run :func:`membership` for each order and attach ``alpha*``."""
    queries = []
    for alpha in alphas:
        res = membership(profile, float(alpha), tol=tol)
        queries.append(
            QueryRecord(
                alpha=res.alpha,
                decision=res.decision,
                sobolev_sum=res.sobolev.value,
                criterion_sum=res.criterion.value,
                boundary=res.boundary,
            )
        )
    return RegularityVerdict(alpha_star=alpha_threshold(profile), queries=tuple(queries))


@dataclass(frozen=True, kw_only=True)
class NumericCriterion:
    """The lambda-domain criterion sampled on a grid."""

    beta: float
    grid: tuple[float, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]

    @property
    def final(self) -> float:
        return self.values[-1]

    def is_increasing(self) -> bool:
        return all(b >= a for a, b in zip(self.values, self.values[1:]))


def _derivative_curve(
    profile: ChaosProfile, k: int, tol: float, *, centred: bool = False
) -> Callable[[float], float]:
    """``t -> d^k B(t)``, less its value at ``t = 0`` when ``centred``."""
    at_zero = 0.0
    if k % 2 == 0:
        at_zero = float(profile.coefficients(k // 2)[k // 2]) * math.factorial(k)
    shift = at_zero if centred else 0.0

    def fn(t: float) -> float:
        if t == 0.0:
            return at_zero - shift
        return apply_termwise(profile, float(k), t, tol=tol).value - shift

    return fn


def criterion_sum_numeric(
    profile: ChaosProfile,
    beta: float,
    grid: Sequence[float],
    *,
    tol: float = DEFAULT_TOL,
    series_tol: float = DEFAULT_TOLERANCE,
) -> NumericCriterion:
    """Evaluate the order-``beta`` lambda-criterion literally on a grid.

    For ``beta > 0`` the integer derivative ``d^m B``, less its constant term,
    comes from the differentiated series and the fractional derivative from
    quadrature; for ``beta < 0`` the integral ``I^{|beta|} B`` is computed by
    quadrature.

    Args:
        profile: The chaos profile.
        beta: Signed criterion order.
        grid: Points in ``(0, 1]``; ``lam = 1`` needs ``B`` finite there.
        tol: Quadrature tolerance.
        series_tol: Tolerance of the inner series evaluations.

    Returns:
        Values and error estimates per grid point; ``inf`` where the
        criterion diverges.

    Raises:
        AccuracyError: A quadrature failed to converge.
    """
    points = tuple(float(v) for v in grid)
    if not points or any(not 0.0 < lam <= 1.0 for lam in points):
        raise DomainError(f"grid must lie in (0, 1], got {points}")
    values: list[float] = []
    errors: list[float] = []

    if beta == 0.0:
        for lam in points:
            res = bs_norm_sq(profile, lam, tol=series_tol)
            values.append(res.value)
            errors.append(res.remainder_bound)
    elif beta < 0.0:
        def b_curve(t: float) -> float:
            return bs_norm_sq(profile, t, tol=series_tol).value

        for lam in points:
            q = iterated_integral_quadrature(b_curve, -beta, lam, tol=tol)
            values.append(q.value)
            errors.append(q.error_bound)
    else:
        order = FracOrder.decompose(beta)
        if order.alpha == 0.0:
            for lam in points:
                res = apply_termwise(profile, float(order.m), lam, tol=series_tol)
                values.append(res.value)
                errors.append(res.remainder_bound)
        else:
            # the constant of d^m B would feed a lam**(-alpha) term the
            # termwise weights drop for 2n < ceil(beta)
            f = _derivative_curve(profile, order.m, series_tol, centred=True)
            fprime = _derivative_curve(profile, order.m + 1, series_tol)
            for lam in points:
                q = rl_derivative_quadrature(f, order.alpha, lam, derivative=fprime, tol=tol)
                values.append(q.value)
                errors.append(q.error_bound)

    logger.debug("numeric criterion beta=%r: %s", beta, values)
    return NumericCriterion(beta=beta, grid=points, values=tuple(values), errors=tuple(errors))
