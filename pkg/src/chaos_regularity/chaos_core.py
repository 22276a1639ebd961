"""Chaos profiles and the Bargmann-Segal norm profile.

A :class:`ChaosProfile` stores ``b_n = n! |F^(n)|^2`` rather than the kernel
norms themselves: every criterion consumes that product, and storing it keeps
factorials out of the arithmetic. The head is an explicit finite sequence, the
tail an analytic model, so divergence is always decided from the model and
never from a floating overflow.

Every norm and criterion in the package is an instance of
:func:`weighted_series`, ``sum_n b_n w(n) x**n``. Weights are supplied as
log-weights and the tail is summed in log space, so large orders cannot
overflow into a wrong verdict.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Annotated, Callable, Iterable, Literal, Optional, Union

import mpmath
import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    ValidationError,
)
from scipy import special

from chaos_regularity.errors import AccuracyError, DomainError, InputError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
MAX_TERMS = 2_000_000
CHUNK = 4096
# explicit terms summed on the boundary of convergence before the zeta tail
BOUNDARY_TERMS = 50_000
_BOUNDARY_SLACK = 8 * np.finfo(float).eps

# n -> log w(n); -inf marks a term the weight removes
LogWeight = Callable[[np.ndarray], np.ndarray]


class FiniteSupport(BaseModel):
    """Tail with ``b_n = 0`` beyond the head."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["finite"] = "finite"


class GeometricPolynomial(BaseModel):
    """Tail ``b_n = C * rho**(2n) * n**(-p)`` beyond the head."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    kind: Literal["geom_poly"] = "geom_poly"
    C: PositiveFloat
    rho: NonNegativeFloat
    p: float

    def log_terms(self, n: np.ndarray) -> np.ndarray:
        """Return ``log b_n`` for the tail indices ``n`` (all ``>= 1``)."""
        n = np.asarray(n, dtype=float)
        return math.log(self.C) + 2.0 * n * math.log(self.rho) - self.p * np.log(n)


TailModel = Annotated[
    Union[FiniteSupport, GeometricPolynomial], Field(discriminator="kind")
]


class ChaosProfile(BaseModel):
    """Coefficients ``b_0..b_N`` plus a tail model for ``n > N``.

    The JSON form ``{"head": [...], "tail": {"kind": ...}}`` is the
    interchange format of the CLI and of all fixtures.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    head: tuple[NonNegativeFloat, ...] = Field(min_length=1)
    tail: TailModel = Field(default_factory=FiniteSupport)

    @classmethod
    def parse(cls, data: Union[str, bytes, dict]) -> ChaosProfile:
        """Validate a JSON document or mapping, raising InputError on failure."""
        try:
            if isinstance(data, (str, bytes)):
                return cls.model_validate_json(data)
            return cls.model_validate(data)
        except ValidationError as exc:
            raise InputError(f"invalid chaos profile: {exc}") from exc

    @property
    def degree(self) -> int:
        """Index ``N`` of the last head coefficient."""
        return len(self.head) - 1

    @property
    def is_finite_support(self) -> bool:
        return isinstance(self.tail, FiniteSupport) or self.tail.rho == 0.0

    def coefficients(self, n_max: int) -> np.ndarray:
        """Return ``b_0..b_{n_max}``, materializing tail terms past the head."""
        out = np.zeros(n_max + 1)
        k = min(n_max, self.degree) + 1
        out[:k] = self.head[:k]
        if n_max > self.degree and not self.is_finite_support:
            n = np.arange(self.degree + 1, n_max + 1)
            out[self.degree + 1 :] = np.exp(self.tail.log_terms(n))
        return out


@dataclass(frozen=True, kw_only=True)
class SeriesValue:
    """Value of a non-negative series with its truncation bookkeeping.

    ``divergent`` is the dedicated infinite variant; ``value`` is then
    ``math.inf``.
    """

    value: float
    remainder_bound: float = 0.0
    terms: int = 0
    divergent: bool = False

    @classmethod
    def infinite(cls, terms: int = 0) -> SeriesValue:
        return cls(value=math.inf, remainder_bound=math.inf, terms=terms, divergent=True)

    @property
    def finite(self) -> bool:
        return not self.divergent

    def scaled(self, factor: float) -> SeriesValue:
        if self.divergent:
            return self
        return SeriesValue(
            value=self.value * factor,
            remainder_bound=self.remainder_bound * abs(factor),
            terms=self.terms,
        )


@dataclass(frozen=True, kw_only=True)
class RadiusOfConvergence:
    """``sup{lam : B(lam) < inf}`` and whether ``B`` is finite at it."""

    radius: float
    finite_at_boundary: bool


@dataclass(frozen=True, kw_only=True)
class CurvePoint:
    lam: float
    value: float
    remainder_bound: float
    divergent: bool


@dataclass(frozen=True)
class BSNormCurve:
    """The Bargmann-Segal norm profile sampled on a set of lambdas."""

    source: ChaosProfile
    points: tuple[CurvePoint, ...]

    @classmethod
    def sample(
        cls, profile: ChaosProfile, lambdas: Iterable[float], *, tol: float = DEFAULT_TOLERANCE
    ) -> BSNormCurve:
        points = []
        for lam in sorted(float(v) for v in lambdas):
            res = bs_norm_sq(profile, lam, tol=tol)
            points.append(
                CurvePoint(
                    lam=lam,
                    value=res.value,
                    remainder_bound=res.remainder_bound,
                    divergent=res.divergent,
                )
            )
        return cls(source=profile, points=tuple(points))

    @property
    def values(self) -> np.ndarray:
        return np.array([pt.value for pt in self.points])

    def is_monotone(self) -> bool:
        finite = [pt for pt in self.points if not pt.divergent]
        return all(
            b.value + b.remainder_bound >= a.value - a.remainder_bound
            for a, b in zip(finite, finite[1:])
        )


def weighted_series(
    profile: ChaosProfile,
    log_weight: Optional[LogWeight] = None,
    *,
    growth: float = 0.0,
    x: float = 1.0,
    tol: float = DEFAULT_TOLERANCE,
    max_terms: int = MAX_TERMS,
) -> SeriesValue:
    """Sum ``b_n * w(n) * x**n`` over the whole profile.

    Args:
        profile: The chaos profile.
        log_weight: Vectorized ``log w(n)``; ``None`` means ``w = 1``.
        growth: Exponent ``g`` with ``w(n) ~ K n**g``; decides divergence on
            the boundary of convergence.
        x: Non-negative argument (``lam**2`` for the norm profile).
        tol: Absolute tolerance for the truncated tail.
        max_terms: Tail terms summed before falling back to a closed form.

    Returns:
        The sum, or the infinite variant when the series diverges.
    """
    if x < 0.0 or not math.isfinite(x):
        raise DomainError(f"series argument must be a finite non-negative real, got {x}")
    terms = _head_terms(profile, log_weight, x)
    head_value = math.fsum(terms.tolist())

    tail = _tail_sum(profile, log_weight, growth, x, tol, max_terms)
    if tail.divergent:
        logger.debug("series diverges: x=%r growth=%r tail=%r", x, growth, profile.tail)
        return SeriesValue.infinite(terms=len(terms))
    return SeriesValue(
        value=head_value + tail.value,
        remainder_bound=tail.remainder_bound,
        terms=len(terms) + tail.terms,
    )


def _head_terms(profile: ChaosProfile, log_weight: Optional[LogWeight], x: float) -> np.ndarray:
    b = np.asarray(profile.head, dtype=float)
    n = np.arange(len(b), dtype=float)
    live = b > 0.0
    if x == 0.0:
        live &= n == 0.0
    log_w = np.zeros_like(b) if log_weight is None else np.asarray(log_weight(n), dtype=float)
    out = np.zeros_like(b)
    with np.errstate(divide="ignore", over="ignore"):
        log_x = math.log(x) if x > 0.0 else 0.0
        out[live] = np.exp(np.log(b[live]) + log_w[live] + n[live] * log_x)
    return out


def _tail_sum(
    profile: ChaosProfile,
    log_weight: Optional[LogWeight],
    growth: float,
    x: float,
    tol: float,
    max_terms: int,
) -> SeriesValue:
    tail = profile.tail
    if profile.is_finite_support or x == 0.0:
        return SeriesValue(value=0.0)
    assert isinstance(tail, GeometricPolynomial)
    start = profile.degree + 1
    y = x * tail.rho**2
    if abs(y - 1.0) <= _BOUNDARY_SLACK:
        if tail.p - growth <= 1.0:
            return SeriesValue.infinite()
        return _boundary_tail(tail, log_weight, growth, start)
    if y > 1.0:
        return SeriesValue.infinite()
    return _geometric_tail(tail, log_weight, y, start, tol, max_terms)


def _log_tail_terms(
    tail: GeometricPolynomial, log_weight: Optional[LogWeight], log_y: float, n: np.ndarray
) -> np.ndarray:
    out = math.log(tail.C) + n * log_y - tail.p * np.log(n)
    if log_weight is not None:
        out = out + np.asarray(log_weight(n), dtype=float)
    return out


def _geometric_tail(
    tail: GeometricPolynomial,
    log_weight: Optional[LogWeight],
    y: float,
    start: int,
    tol: float,
    max_terms: int,
) -> SeriesValue:
    if log_weight is None and tail.p == 0.0:
        return SeriesValue(value=tail.C * y**start / (1.0 - y))

    log_y = math.log(y)
    parts: list[np.ndarray] = []
    k = start
    while k - start < max_terms:
        n = np.arange(k, k + CHUNK, dtype=float)
        parts.append(_log_tail_terms(tail, log_weight, log_y, n))
        k += CHUNK
        # ratio of consecutive terms at the first omitted index bounds the
        # remainder once it drops below one (ratios tend monotonically to y)
        lt = _log_tail_terms(tail, log_weight, log_y, np.array([k, k + 1], dtype=float))
        log_q = max(lt[1] - lt[0], log_y)
        if log_q < 0.0:
            log_bound = lt[0] - math.log1p(-math.exp(log_q))
            if log_bound <= math.log(tol):
                return SeriesValue(
                    value=_sum_log_terms(parts), remainder_bound=math.exp(log_bound), terms=k - start
                )

    best = _sum_log_terms(parts)
    if log_weight is None:
        logger.debug("tail needs more than %d terms; using the Lerch closed form", max_terms)
        with mpmath.workdps(30):
            value = tail.C * float(mpmath.power(y, start) * mpmath.lerchphi(y, tail.p, start))
        return SeriesValue(value=value, terms=k - start)
    raise AccuracyError(
        f"weighted tail did not reach tolerance {tol} within {max_terms} terms",
        best_estimate=best,
    )


def _sum_log_terms(parts: list[np.ndarray]) -> float:
    """``sum(exp(log_terms))``, scaled by the largest term before exponentiating."""
    log_terms = np.concatenate(parts)
    top = float(np.max(log_terms))
    if top == -math.inf:
        return 0.0
    scaled = math.fsum(np.exp(log_terms - top).tolist())
    # a finite sum past the float range stays finite in the verdict
    return scaled * math.exp(top) if top < 709.0 else math.inf


def _boundary_tail(
    tail: GeometricPolynomial, log_weight: Optional[LogWeight], growth: float, start: int
) -> SeriesValue:
    if log_weight is None:
        return SeriesValue(value=tail.C * float(special.zeta(tail.p, start)))
    n = np.arange(start, start + BOUNDARY_TERMS, dtype=float)
    explicit = _sum_log_terms([_log_tail_terms(tail, log_weight, 0.0, n)])
    m = float(start + BOUNDARY_TERMS)
    scale = math.exp(float(log_weight(np.array([m]))[0]) - growth * math.log(m))
    rest = tail.C * scale * float(special.zeta(tail.p - growth, m))
    # weights match their power law only up to O(1/n) corrections
    bound = rest * (1.0 + abs(growth) + abs(tail.p)) ** 2 / m
    return SeriesValue(value=explicit + rest, remainder_bound=bound, terms=BOUNDARY_TERMS)


def bs_norm_sq(
    profile: ChaosProfile, lam: float, *, tol: float = DEFAULT_TOLERANCE
) -> SeriesValue:
    """Return ``B(lam) = sum_n b_n lam**(2n)``, the squared Bargmann-Segal norm."""
    if lam < 0.0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    return weighted_series(profile, x=lam * lam, tol=tol)


def gs_norm_sq(profile: ChaosProfile, s: float, *, tol: float = DEFAULT_TOLERANCE) -> SeriesValue:
    """Return the squared ``G_s`` norm ``sum_n 2**(2sn) b_n = B(2**s)``."""
    return bs_norm_sq(profile, 2.0**s, tol=tol)


def l2_norm_sq(profile: ChaosProfile, *, tol: float = DEFAULT_TOLERANCE) -> SeriesValue:
    """Return the ``L^2(mu)`` norm ``sum_n b_n``."""
    return gs_norm_sq(profile, 0.0, tol=tol)


def convergence_radius(profile: ChaosProfile) -> RadiusOfConvergence:
    if profile.is_finite_support:
        return RadiusOfConvergence(radius=math.inf, finite_at_boundary=True)
    tail = profile.tail
    assert isinstance(tail, GeometricPolynomial)
    return RadiusOfConvergence(radius=1.0 / tail.rho, finite_at_boundary=tail.p > 1.0)


def gprime_order(profile: ChaosProfile) -> int:
    """Least integer ``q >= 0`` with the profile in ``G_{-q}``."""
    if profile.is_finite_support:
        return 0
    tail = profile.tail
    assert isinstance(tail, GeometricPolynomial)
    q = max(0, math.ceil(math.log2(tail.rho)))
    if tail.rho / 2.0**q >= 1.0 and tail.p <= 1.0:
        q += 1
    return q


def materialize(profile: ChaosProfile, n_terms: int) -> ChaosProfile:
    """Move ``n_terms`` tail terms into the head; the represented sequence is unchanged."""
    if n_terms < 0:
        raise InputError("n_terms must be non-negative")
    head = profile.coefficients(profile.degree + n_terms)
    return ChaosProfile(head=tuple(head.tolist()), tail=profile.tail)
