"""Gauss kernels ``Phi_A`` for a diagonal operator ``A``.

With ``kappa_n = 1 - a_n`` the Bargmann-Segal profile is the infinite product

    G(lam) = det(Id - lam**4 (Id - A)**2)**(-1/2) = prod_n (1 - lam**4 kappa_n**2)**(-1/2),

evaluated as ``exp(-1/2 sum_n log(1 - lam**4 kappa_n**2))``. The tail
``kappa_n = c r**n`` (``n > M``) is summed in closed form through the series
of the logarithm.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from chaos_regularity.chaos_core import (
    ChaosProfile,
    FiniteSupport,
    GeometricPolynomial,
    SeriesValue,
)
from chaos_regularity.errors import ConsistencyError, DomainError
from chaos_regularity.fractional_calc import FracOrder, rl_derivative_quadrature
from chaos_regularity.gaussian_mc import STransformEvaluator
from chaos_regularity.quadrature import DEFAULT_TOL
from chaos_regularity.regularity import Decision, criterion_sum, membership

logger = logging.getLogger(__name__)

MIN_DEPTH = 100
MAX_DEPTH = 4000
_TAIL_TERMS = 10_000


class KappaTail(BaseModel):
    """``kappa_n = c r**n`` for every ``n`` past the head."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    c: float
    r: float = Field(ge=0.0, lt=1.0)


class GaussKernelSpec(BaseModel):
    """Eigenvalues ``a_1..a_M`` of ``A`` in ``(0, 2)`` plus an optional decaying tail."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    eigs_head: tuple[float, ...] = ()
    eigs_tail: Optional[KappaTail] = None

    @model_validator(mode="after")
    def _check_eigenvalues(self) -> GaussKernelSpec:
        for a in self.eigs_head:
            if not 0.0 < a < 2.0:
                raise ValueError(f"eigenvalue {a} outside (0, 2)")
        if self.eigs_tail is not None and abs(self.eigs_tail.c) * self.eigs_tail.r ** (self.M + 1) >= 1.0:
            raise ValueError("tail eigenvalues leave (0, 2)")
        return self

    @property
    def M(self) -> int:
        return len(self.eigs_head)

    @property
    def kappas(self) -> np.ndarray:
        return 1.0 - np.asarray(self.eigs_head, dtype=float)

    @property
    def tail_start(self) -> Optional[float]:
        """``|kappa_{M+1}|``, the largest tail value."""
        if self.eigs_tail is None or self.eigs_tail.c == 0.0 or self.eigs_tail.r == 0.0:
            return None
        return abs(self.eigs_tail.c) * self.eigs_tail.r ** (self.M + 1)

    @property
    def max_kappa(self) -> float:
        head = float(np.max(np.abs(self.kappas))) if self.M else 0.0
        return max(head, self.tail_start or 0.0)

    def kappa_list(self, n_max: int) -> np.ndarray:
        """``kappa_1..kappa_{n_max}`` with the tail materialized."""
        out = np.zeros(n_max)
        k = min(n_max, self.M)
        out[:k] = self.kappas[:k]
        if n_max > self.M and self.eigs_tail is not None:
            n = np.arange(self.M + 1, n_max + 1, dtype=float)
            out[self.M :] = self.eigs_tail.c * self.eigs_tail.r**n
        return out


def _tail_log_coefficients(c_sq_start: float, r: float, order: int) -> np.ndarray:
    """``A_k`` with ``sum_{n>M} log(1 - q kappa_n**2) = -sum_k A_k q**k``."""
    k = np.arange(1, order + 1, dtype=float)
    with np.errstate(under="ignore"):
        return c_sq_start**k / (k * (1.0 - r ** (2.0 * k)))


def _log_sum(
    kappa_sq: np.ndarray, tail: Optional[tuple[float, float]], q: float
) -> Optional[float]:
    """``sum log(1 - q kappa**2)`` over head and tail; ``None`` once a radicand is ``<= 0``.

    ``tail`` is ``(c**2 r**(2(M+1)), r)``.
    """
    radicand = 1.0 - q * kappa_sq
    if np.any(radicand <= 0.0):
        return None
    total = math.fsum(np.log1p(-q * kappa_sq).tolist())
    if tail is None or tail[0] == 0.0 or q == 0.0:
        return total
    start, r = tail
    x = q * start
    if x >= 1.0:
        return None
    terms: list[float] = []
    for k in range(1, _TAIL_TERMS + 1):
        term = x**k / (k * (1.0 - r ** (2 * k)))
        terms.append(term)
        if term <= 1e-18 * max(1.0, terms[0]):
            break
    return total - math.fsum(terms)


def _tail_pair(spec: GaussKernelSpec) -> Optional[tuple[float, float]]:
    start = spec.tail_start
    if start is None:
        return None
    assert spec.eigs_tail is not None
    return start * start, spec.eigs_tail.r


def gk_bs_norm(spec: GaussKernelSpec, lam: float) -> SeriesValue:
    """``G(lam) = prod_n (1 - lam**4 kappa_n**2)**(-1/2)``, or the divergent variant."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    s = _log_sum(spec.kappas**2, _tail_pair(spec), lam**4)
    if s is None:
        return SeriesValue.infinite()
    return SeriesValue(value=math.exp(-0.5 * s))


@dataclass(frozen=True, kw_only=True)
class GaussKernelL2:
    member: bool
    determinant: float
    bs_norm_at_one: float


def gk_l2_check(spec: GaussKernelSpec) -> GaussKernelL2:
    """``Phi_A in L^2`` when ``0 < det(2A - A**2) < inf``.

    The determinant is taken as ``prod a_n (2 - a_n)`` and checked against
    ``G(1)**(-2)``.

    Raises:
        ConsistencyError: The two evaluations disagree beyond ``1e-10``.
    """
    a = np.asarray(spec.eigs_head, dtype=float)
    log_det = math.fsum((np.log(a) + np.log(2.0 - a)).tolist())
    tail = _log_sum(np.zeros(0), _tail_pair(spec), 1.0)
    if tail is None:
        return GaussKernelL2(member=False, determinant=0.0, bs_norm_at_one=math.inf)
    det = math.exp(log_det + tail)
    norm = gk_bs_norm(spec, 1.0)
    member = 0.0 < det < math.inf
    if member and norm.finite and abs(norm.value**2 * det - 1.0) > 1e-10:
        raise ConsistencyError(f"G(1)^2 det = {norm.value ** 2 * det}, expected 1")
    logger.debug("det(2A - A^2) = %r, G(1) = %r", det, norm.value)
    return GaussKernelL2(member=member, determinant=det, bs_norm_at_one=norm.value)


def _jet_log(a: np.ndarray) -> np.ndarray:
    """Taylor coefficients of ``log a`` along the last axis."""
    b = np.zeros_like(a)
    b[..., 0] = np.log(a[..., 0])
    for k in range(1, a.shape[-1]):
        acc = a[..., k].copy()
        for j in range(1, k):
            acc -= j * b[..., j] * a[..., k - j] / k
        b[..., k] = acc / a[..., 0]
    return b


def _jet_exp(b: np.ndarray) -> np.ndarray:
    a = np.zeros_like(b)
    a[0] = math.exp(b[0])
    for k in range(1, len(b)):
        a[k] = sum(j * b[j] * a[k - j] for j in range(1, k + 1)) / k
    return a


def _log_sum_jet(spec: GaussKernelSpec, lam: float, order: int) -> np.ndarray:
    j = np.arange(order + 1)
    quartic = np.zeros(order + 1)
    live = j <= 4
    quartic[live] = special.binom(4, j[live]) * lam ** (4.0 - j[live])
    k2 = spec.kappas**2
    radicand = -k2[:, None] * quartic[None, :]
    radicand[:, 0] += 1.0
    if np.any(radicand[:, 0] <= 0.0):
        raise DomainError(f"G diverges at lambda={lam}")
    jet = _jet_log(radicand).sum(axis=0) if len(k2) else np.zeros(order + 1)

    pair = _tail_pair(spec)
    if pair is not None:
        coeffs = _tail_log_coefficients(pair[0], pair[1], _TAIL_TERMS)
        for k, a_k in enumerate(coeffs, start=1):
            power = special.binom(4 * k, j) * lam ** np.maximum(4.0 * k - j, 0.0)
            power[j > 4 * k] = 0.0
            term = a_k * power
            jet -= term
            if 4 * k > order and a_k * lam ** (4 * k) * special.binom(4 * k, order) < 1e-18:
                break
    return jet


def gk_derivative(spec: GaussKernelSpec, lam: float, k: int) -> float:
    """``d^k G / d lam^k`` from Taylor jets of the logarithm of the product."""
    if k < 0:
        raise DomainError(f"derivative order must be non-negative, got {k}")
    jet = _jet_exp(-0.5 * _log_sum_jet(spec, lam, k))
    return float(jet[k] * math.factorial(k))


def gk_operator(spec: GaussKernelSpec, alpha: float, lam: float, *, tol: float = DEFAULT_TOL) -> float:
    """``D^frac (d^m G - d^m G(0))`` at ``lam`` for ``alpha = m + frac > 0``."""
    order = FracOrder.decompose(alpha)
    if order.sign < 0 or alpha == 0.0:
        raise DomainError(f"regularity order must be positive, got {alpha}")
    if order.alpha == 0.0:
        return gk_derivative(spec, lam, order.m)
    shift = gk_derivative(spec, 0.0, order.m)

    def f(t: float) -> float:
        return gk_derivative(spec, t, order.m) - shift

    def fprime(t: float) -> float:
        return gk_derivative(spec, t, order.m + 1)

    return rl_derivative_quadrature(f, order.alpha, lam, derivative=fprime, tol=tol).value


def _profile_depth(spec: GaussKernelSpec, depth: int) -> int:
    kmax = spec.max_kappa
    if kmax == 0.0:
        return depth
    needed = math.ceil(math.log(1e-16) / math.log(kmax * kmax))
    return max(depth, min(MAX_DEPTH, needed))


def gauss_kernel_chaos_profile(spec: GaussKernelSpec, depth: int = MIN_DEPTH) -> ChaosProfile:
    """Power-series expansion of ``G`` with an analytic tail.

    ``log G = 1/2 sum_k P_k lam**(4k) / k`` with power sums
    ``P_k = sum_n kappa_n**(2k)``; exponentiating gives the coefficients of
    ``lam**(4k)``, i.e. the chaos coefficients ``b_{2k}``. Near the radius
    ``G ~ K (1 - lam**4 kappa_max**2)**(-j/2)`` with ``j`` the multiplicity
    of ``kappa_max``, which fixes ``rho = kappa_max**(1/2)`` and
    ``p = 1 - j/2``.
    """
    kmax = spec.max_kappa
    if kmax == 0.0:
        return ChaosProfile(head=(1.0,), tail=FiniteSupport())
    depth = _profile_depth(spec, max(depth, MIN_DEPTH))

    k = np.arange(1, depth + 1, dtype=float)
    k2 = spec.kappas**2
    power_sums = (k2[None, :] ** k[:, None]).sum(axis=1) if len(k2) else np.zeros(depth)
    pair = _tail_pair(spec)
    if pair is not None:
        power_sums = power_sums + pair[0] ** k / (1.0 - pair[1] ** (2.0 * k))
    log_coeffs = np.concatenate([[0.0], 0.5 * power_sums / k])

    g = np.zeros(depth + 1)
    g[0] = 1.0
    weighted = np.arange(depth + 1) * log_coeffs
    for n in range(1, depth + 1):
        g[n] = np.dot(weighted[1 : n + 1], g[n - 1 :: -1][:n]) / n

    head = np.zeros(2 * depth + 1)
    head[::2] = g

    abs_head = np.abs(spec.kappas)
    at_max = np.isclose(abs_head, kmax, rtol=1e-12, atol=0.0)
    j = int(at_max.sum())
    others = k2[~at_max] / (kmax * kmax)
    tail_rest = None
    if pair is not None:
        start, r = pair
        if math.isclose(math.sqrt(start), kmax, rel_tol=1e-12):
            j += 1
            tail_rest = (start * r * r / (kmax * kmax), r)
        else:
            tail_rest = (start / (kmax * kmax), r)
    log_k = _log_sum(others, tail_rest, 1.0)
    assert log_k is not None
    const = math.exp(-0.5 * log_k) * 2.0 ** (-0.5 * j) / math.gamma(0.5 * j)
    tail = GeometricPolynomial(C=const, rho=math.sqrt(kmax), p=1.0 - 0.5 * j)
    logger.debug("Gauss-kernel profile: depth=%d kappa_max=%r multiplicity=%d", depth, kmax, j)
    return ChaosProfile(head=tuple(head.tolist()), tail=tail)


@dataclass(frozen=True, kw_only=True)
class GKRegularity:
    """Evidence for ``Phi_A in D^{alpha,2}``: bounded means member, unbounded decides nothing."""

    alpha: float
    grid: tuple[float, ...]
    values: tuple[float, ...]
    bounded: bool
    sup_estimate: float
    chaos_value: float
    chaos_decision: Decision
    agreement: bool


def gk_regularity(
    spec: GaussKernelSpec,
    alpha: float,
    grid: Sequence[float],
    *,
    depth: int = MIN_DEPTH,
    tol: float = DEFAULT_TOL,
) -> GKRegularity:
    """Sample ``d^alpha G`` on a grid approaching 1 and compare with the chaos route.

    The supremum over ``(0, 1)`` of a derivative with non-negative series
    coefficients is its value at 1, which is cross-checked against
    ``criterion_sum`` on :func:`gauss_kernel_chaos_profile`.
    """
    if alpha <= 0.0:
        raise DomainError(f"regularity order must be positive, got {alpha}")
    points = tuple(sorted(float(v) for v in grid))
    if not points or any(not 0.0 < v <= 1.0 for v in points):
        raise DomainError(f"grid must lie in (0, 1], got {points}")
    values = tuple(gk_operator(spec, alpha, lam, tol=tol) for lam in points)
    sup_estimate = gk_operator(spec, alpha, 1.0, tol=tol)
    bounded = all(math.isfinite(v) for v in values) and math.isfinite(sup_estimate)

    profile = gauss_kernel_chaos_profile(spec, depth)
    chaos = criterion_sum(profile, alpha)
    decision = membership(profile, alpha).decision
    scale = max(abs(sup_estimate), abs(chaos.value), 1e-300)
    agreement = chaos.finite and abs(chaos.value - sup_estimate) <= 1e-4 * scale
    if not agreement:
        logger.warning(
            "alpha=%r: lambda-domain sup %r vs chaos route %r", alpha, sup_estimate, chaos.value
        )
    return GKRegularity(
        alpha=alpha,
        grid=points,
        values=values,
        bounded=bounded,
        sup_estimate=sup_estimate,
        chaos_value=chaos.value,
        chaos_decision=decision,
        agreement=agreement,
    )


class GaussKernelEvaluator(STransformEvaluator):
    """``S Phi_A(lam u) = exp(-1/2 lam**2 sum_n kappa_n z_n**2)`` on the first ``truncation`` modes."""

    def __init__(self, spec: GaussKernelSpec, truncation: int = 400):
        kappas = spec.kappa_list(max(truncation, spec.M))
        kappas = kappas[np.abs(kappas) > 1e-14]
        self.spec = spec
        self.kappas = kappas if len(kappas) else np.zeros(1)
        self.dim = len(self.kappas)
        self.name = "gauss-kernel"
        kmax = float(np.max(np.abs(self.kappas)))
        self.max_lambda = kmax**-0.5 if kmax > 0.0 else math.inf
        self.variance_radius = (2.0 * kmax) ** -0.5 if kmax > 0.0 else math.inf

    def evaluate(self, lam: float, u: np.ndarray) -> np.ndarray:
        z = lam * u[:, : self.dim]
        return np.exp(-0.5 * (z * z) @ self.kappas)
