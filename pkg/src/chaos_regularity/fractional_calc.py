"""Riemann-Liouville operators on ``(0, 1)``.

Operators act two ways: termwise on power series in closed form through
Gamma ratios, and directly on callables by singular quadrature. The second
route is the oracle for the first.

A general order ``beta = m + alpha`` is always applied as the fractional part
after the integer part, ``D^alpha d^m`` for ``beta > 0`` and ``I^alpha I^m``
for ``beta < 0``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from chaos_regularity.chaos_core import (
    DEFAULT_TOLERANCE,
    ChaosProfile,
    LogWeight,
    SeriesValue,
    weighted_series,
)
from chaos_regularity.errors import AccuracyError, DomainError, InputError
from chaos_regularity.quadrature import (
    DEFAULT_TOL,
    QuadratureResult,
    Singularity,
    integrate_1d,
)

FD_STEP = 1e-3


@dataclass(frozen=True)
class FracOrder:
    """Decomposition ``|beta| = m + alpha`` with ``m`` integer, ``0 <= alpha < 1``."""

    m: int
    alpha: float
    sign: int = 1

    def __post_init__(self) -> None:
        if self.m < 0 or not 0.0 <= self.alpha < 1.0 or self.sign not in (1, -1):
            raise InputError(f"invalid fractional order {self}")

    @classmethod
    def decompose(cls, beta: float) -> FracOrder:
        mag = abs(beta)
        m = math.floor(mag)
        return cls(m, mag - m, -1 if beta < 0 else 1)

    @property
    def beta(self) -> float:
        return self.sign * (self.m + self.alpha)


def gamma_ratio(x: float, delta: float) -> float:
    """Return ``Gamma(x) / Gamma(x - delta)`` for ``x > 0``, ``x - delta > 0``.

    Evaluated as a Pochhammer symbol, which keeps full relative precision for
    arguments far beyond where raw Gamma values overflow.
    """
    if x <= 0.0 or x - delta <= 0.0:
        raise DomainError(f"gamma_ratio needs x > 0 and x - delta > 0, got x={x}, delta={delta}")
    return float(special.poch(x - delta, delta))


def _check_elementary(n: int, alpha: float) -> None:
    if n < 0:
        raise DomainError(f"monomial degree must be non-negative, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"elementary order must lie in (0, 1), got {alpha}")


def rl_integral_monomial(n: int, alpha: float) -> float:
    """Coefficient of ``I^alpha x**n = c x**(n+alpha)``."""
    _check_elementary(n, alpha)
    return gamma_ratio(n + 1.0, -alpha)


def rl_derivative_monomial(n: int, alpha: float) -> float:
    """Coefficient of ``D^alpha x**n = c x**(n-alpha)``."""
    _check_elementary(n, alpha)
    return gamma_ratio(n + 1.0, alpha)


def gamma_ratio_asymptotic_error(n: int, alpha: float, sign: int) -> float:
    """Return ``|Gamma(n+1)/Gamma(n+1-sign*alpha) * n**(-sign*alpha) - 1|``."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if sign not in (1, -1):
        raise InputError(f"sign must be +1 or -1, got {sign}")
    delta = sign * alpha
    return abs(gamma_ratio(n + 1.0, delta) * float(n) ** (-delta) - 1.0)


def termwise_log_weight(beta: float) -> LogWeight:
    """Log coefficient map of the order-``beta`` operator on ``lam**(2n)``.

    ``lam**(2n)`` goes to ``Gamma(2n+1)/Gamma(2n+1-beta) lam**(2n-beta)``;
    for ``beta > 0`` monomials with ``2n < ceil(beta)`` are dropped, so every
    surviving image is a non-negative power of ``lam``.
    """
    cutoff = math.ceil(beta) if beta > 0.0 else 0

    def log_weight(n: np.ndarray) -> np.ndarray:
        k = 2.0 * np.asarray(n, dtype=float)
        out = np.full_like(k, -math.inf)
        live = k >= cutoff
        out[live] = _log_gamma_ratio(k[live] + 1.0, beta)
        return out

    return log_weight


def _log_gamma_ratio(x: np.ndarray, delta: float) -> np.ndarray:
    """``log(Gamma(x) / Gamma(x - delta))``; Pochhammer where finite, log-gamma past overflow."""
    with np.errstate(over="ignore", divide="ignore"):
        direct = np.log(special.poch(x - delta, delta))
    fallback = special.gammaln(x) - special.gammaln(x - delta)
    return np.where(np.isfinite(direct), direct, fallback)


def apply_termwise(
    profile: ChaosProfile, beta: float, lam: float, *, tol: float = DEFAULT_TOLERANCE
) -> SeriesValue:
    """Order-``beta`` image of ``B(lam)`` evaluated at ``lam > 0``."""
    res = weighted_series(profile, termwise_log_weight(beta), growth=beta, x=lam * lam, tol=tol)
    return res.scaled(lam ** (-beta))


def rl_apply_series(
    profile: ChaosProfile, beta: float, lam: float, *, tol: float = DEFAULT_TOLERANCE
) -> SeriesValue:
    """Apply the order-``beta`` Riemann-Liouville operator to ``B`` termwise.

    Args:
        profile: Chaos profile defining ``B(lam) = sum b_n lam**(2n)``.
        beta: Signed order; positive orders differentiate, negative integrate.
        lam: Evaluation point in ``(0, 1]``.
        tol: Absolute tolerance of the series tail.

    Returns:
        The series value, or its divergent variant.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")
    return apply_termwise(profile, beta, lam, tol=tol)


def central_difference(f: Callable[[float], float], t: float, step: float = FD_STEP) -> float:
    """Five-point derivative of ``f`` at ``t``; one-sided when ``t`` is near zero."""
    if t - 2.0 * step < 0.0:
        return (
            -25.0 * f(t)
            + 48.0 * f(t + step)
            - 36.0 * f(t + 2.0 * step)
            + 16.0 * f(t + 3.0 * step)
            - 3.0 * f(t + 4.0 * step)
        ) / (12.0 * step)
    return (
        f(t - 2.0 * step) - 8.0 * f(t - step) + 8.0 * f(t + step) - f(t + 2.0 * step)
    ) / (12.0 * step)


def _require(res: QuadratureResult, what: str) -> QuadratureResult:
    if not res.converged and not res.divergent:
        raise AccuracyError(
            f"{what} did not converge",
            best_estimate=res.value,
            error_estimate=res.error_bound,
        )
    return res


def _scaled(res: QuadratureResult, factor: float, shift: float = 0.0) -> QuadratureResult:
    if res.divergent:
        return res
    return dataclasses.replace(
        res, value=shift + factor * res.value, error_bound=abs(factor) * res.error_bound
    )


def rl_integral_quadrature(
    f: Callable[[float], float], alpha: float, x: float, *, tol: float = DEFAULT_TOL
) -> QuadratureResult:
    """``I^alpha f(x) = (1/Gamma(alpha)) int_0^x f(t) (x-t)**(alpha-1) dt``.

    Raises:
        AccuracyError: The adaptive rule did not reach ``tol``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"elementary order must lie in (0, 1), got {alpha}")
    return iterated_integral_quadrature(f, alpha, x, tol=tol)


def iterated_integral_quadrature(
    f: Callable[[float], float], order: float, x: float, *, tol: float = DEFAULT_TOL
) -> QuadratureResult:
    """``I^alpha I^m f(x)`` for ``order = m + alpha > 0``.

    The composition collapses to a single Cauchy-type integral with kernel
    ``(x-t)**(order-1) / Gamma(order)``.
    """
    if order <= 0.0:
        raise DomainError(f"integration order must be positive, got {order}")
    if x < 0.0:
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return QuadratureResult(value=0.0, error_bound=0.0, evaluations=0, converged=True)
    res = integrate_1d(f, 0.0, x, Singularity.power(order - 1.0, "right"), tol=tol)
    return _scaled(_require(res, f"I^{order} at x={x}"), float(special.rgamma(order)))


def rl_derivative_quadrature(
    f: Callable[[float], float],
    alpha: float,
    x: float,
    *,
    derivative: Optional[Callable[[float], float]] = None,
    tol: float = DEFAULT_TOL,
    step: float = FD_STEP,
) -> QuadratureResult:
    """``D^alpha f(x)`` in its Caputo-plus-boundary form.

    ``D^alpha f(x) = f(0) x**(-alpha) / Gamma(1-alpha)
    + (1/Gamma(1-alpha)) int_0^x f'(t) (x-t)**(-alpha) dt``.

    Args:
        f: Absolutely continuous function on ``[0, x]``.
        alpha: Order in ``(0, 1)``.
        x: Evaluation point, ``x > 0``.
        derivative: ``f'``; estimated by :func:`central_difference` if omitted.
        tol: Quadrature tolerance.
        step: Finite-difference step.

    Raises:
        AccuracyError: The adaptive rule did not reach ``tol``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"elementary order must lie in (0, 1), got {alpha}")
    if x <= 0.0:
        raise DomainError(f"x must be positive, got {x}")
    fprime = derivative or (lambda t: central_difference(f, t, step))
    scale = float(special.rgamma(1.0 - alpha))
    boundary = f(0.0) * x ** (-alpha) * scale
    res = integrate_1d(fprime, 0.0, x, Singularity.power(-alpha, "right"), tol=tol)
    return _scaled(_require(res, f"D^{alpha} at x={x}"), scale, shift=boundary)
