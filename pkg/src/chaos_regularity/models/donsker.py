"""Donsker's delta ``delta(X_t)`` of a ``d``-dimensional Gaussian state.

The Bargmann-Segal profile factorizes over the components,
``B(lam) = C_spec (1 - lam**4)**(-d/2)`` with
``C_spec = prod_k 1 / (2 pi ||f_k||**2)``, so its chaos coefficients are a
binomial series in ``lam**4`` and the critical order is ``-d/2``.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator
from scipy import special

from chaos_regularity.chaos_core import ChaosProfile, GeometricPolynomial
from chaos_regularity.errors import DomainError
from chaos_regularity.gaussian_mc import STransformEvaluator
from chaos_regularity.quadrature import (
    DEFAULT_TOL,
    QuadratureResult,
    Singularity,
    integrate_1d,
    integrate_2d_gaussian,
)

logger = logging.getLogger(__name__)


class DonskerSpec(BaseModel):
    """Dimension and component norms ``||f_k||`` of the Gaussian state."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    d: PositiveInt
    norms: tuple[PositiveFloat, ...] = Field(default=())

    @model_validator(mode="before")
    @classmethod
    def _unit_norms(cls, data: dict) -> dict:
        if isinstance(data, dict) and not data.get("norms") and data.get("d"):
            data = {**data, "norms": (1.0,) * int(data["d"])}
        return data

    @model_validator(mode="after")
    def _check_length(self) -> DonskerSpec:
        if len(self.norms) != self.d:
            raise ValueError(f"expected {self.d} norms, got {len(self.norms)}")
        return self

    @property
    def c_spec(self) -> float:
        return math.exp(-sum(math.log(2.0 * math.pi * f * f) for f in self.norms))


def donsker_bs_norm(spec: DonskerSpec, lam: float) -> float:
    """``B(lam) = C_spec (1 + lam**2)**(-d/2) (1 - lam**2)**(-d/2)`` on ``[0, 1)``."""
    if not 0.0 <= lam < 1.0:
        raise DomainError(f"Donsker's delta has B(lam) = inf outside [0, 1), got lam={lam}")
    return spec.c_spec * math.exp(-0.5 * spec.d * math.log1p(-(lam**4)))


def donsker_chaos_profile(spec: DonskerSpec, N: int = 400) -> ChaosProfile:
    """Chaos coefficients of ``delta(X_t)`` up to index ``N`` with an analytic tail.

    ``b_{2k} = C_spec Gamma(k + d/2) / (Gamma(d/2) k!)`` and odd coefficients
    vanish. The tail ``C n**(d/2 - 1)`` uses the exact exponent of the
    binomial asymptotics; its constant averages the even indices over both
    parities.
    """
    if N < 0:
        raise DomainError(f"truncation must be non-negative, got {N}")
    half = 0.5 * spec.d
    head = np.zeros(N + 1)
    k = np.arange(N // 2 + 1, dtype=float)
    head[::2] = spec.c_spec * np.exp(
        special.gammaln(k + half) - special.gammaln(half) - special.gammaln(k + 1.0)
    )
    tail = GeometricPolynomial(
        C=spec.c_spec * 2.0 ** (-half) / math.gamma(half), rho=1.0, p=1.0 - half
    )
    logger.debug("Donsker profile d=%d: %d head terms, C_spec=%r", spec.d, N + 1, spec.c_spec)
    return ChaosProfile(head=tuple(head.tolist()), tail=tail)


def donsker_alpha_star(d: int) -> float:
    """``delta(X_t)`` lies in ``D^{alpha,2}`` exactly for ``alpha < -d/2``."""
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    return -0.5 * d


def log_beta_integral(alpha: float) -> float:
    """``int_0^1 ln(y) y**(alpha-1) dy = -1/alpha**2``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return -1.0 / (alpha * alpha)


def log_beta_quadrature(alpha: float, *, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """Quadrature of the same integral with the log and power weights declared."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return integrate_1d(lambda y: 1.0, 0.0, 1.0, Singularity.log("left", alpha - 1.0), tol=tol)


def donsker_reduced_quadrature(lam: float, *, tol: float = 1e-10) -> QuadratureResult:
    """``(1/pi) int exp(-lam**2 (x**2 - y**2)) exp(-x**2 - y**2) dx dy``.

    Equals ``(1 + lam**2)**(-1/2) (1 - lam**2)**(-1/2)``, the one-dimensional
    profile without its normalization.
    """
    if not 0.0 <= lam < 1.0:
        raise DomainError(f"lambda must lie in [0, 1), got {lam}")
    l2 = lam * lam

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-(1.0 + l2) * x * x - (1.0 - l2) * y * y) / math.pi

    return integrate_2d_gaussian(integrand, decay=1.0 - l2, tol=tol)


class DonskerEvaluator(STransformEvaluator):
    """``S delta(X_t)(lam u) = prod_k exp(-lam**2 z_k**2 / 2) / sqrt(2 pi ||f_k||**2)``."""

    max_lambda = 1.0
    variance_radius = 2.0**-0.5

    def __init__(self, spec: DonskerSpec):
        self.spec = spec
        self.dim = spec.d
        self.name = f"donsker-d{spec.d}"
        self._amplitude = math.sqrt(spec.c_spec)

    def evaluate(self, lam: float, u: np.ndarray) -> np.ndarray:
        z = lam * u[:, : self.dim]
        return self._amplitude * np.exp(-0.5 * np.sum(z * z, axis=1))


def donsker_evaluator(spec: DonskerSpec) -> DonskerEvaluator:
    return DonskerEvaluator(spec)
