"""Self-intersection local time criteria.

With ``f(t, s) = f_t - f_s`` the increment kernel, every criterion is an
integral over ``{0 < s1 < t1 < T} x {0 < s2 < t2 < T}`` of a function of

* the increment norms ``n_i = ||f(t_i, s_i)||**2`` and
* their cross term ``c = <f(t1, s1), f(t2, s2)>``,

through the Gram determinant ``D = n1 n2 - c**2``. ``D`` vanishes where the
two increments coincide, which is the singular set the quadrature handles.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from chaos_regularity.errors import DomainError, SingularityError
from chaos_regularity.quadrature import (
    ExclusionTube,
    Integrand4,
    MeshSpec,
    QuadratureResult,
    integrate_simplex4,
)

logger = logging.getLogger(__name__)

Method = Literal["duffy", "qmc"]


class CovarianceModel(ABC):
    """Increment geometry of a Gaussian process on ``[0, T]``.

    Both methods must accept numpy arrays and broadcast elementwise.
    """

    T: float
    bound: float

    @abstractmethod
    def incr_norm_sq(self, t: np.ndarray, s: np.ndarray) -> np.ndarray:
        """``||f_t - f_s||**2``."""

    @abstractmethod
    def cross(self, t1: np.ndarray, s1: np.ndarray, t2: np.ndarray, s2: np.ndarray) -> np.ndarray:
        """``<f(t1, s1), f(t2, s2)>``."""

    def gram(self, t1, s1, t2, s2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.incr_norm_sq(t1, s1), self.incr_norm_sq(t2, s2), self.cross(t1, s1, t2, s2)

    def gram_relative(self, t1, s1, dt, ds, width2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gram entries with the second pair given as ``t1 + dt, s1 + ds``.

        ``width2 = t2 - s2`` is supplied by the caller; models whose entries
        depend on differences only should override this to avoid forming
        ``t2`` and ``s2``.
        """
        return self.gram(t1, s1, np.asarray(t1) + dt, np.asarray(s1) + ds)


class FbmParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    H: float = Field(gt=0.0, lt=1.0)
    T: PositiveFloat = 1.0


class FbmCovariance(CovarianceModel):
    """Fractional Brownian motion, ``R(t, s) = (|t|**2H + |s|**2H - |t - s|**2H) / 2``."""

    def __init__(self, params: FbmParams):
        self.params = params
        self.T = params.T
        self.bound = params.T**params.H
        self._two_h = 2.0 * params.H

    def incr_norm_sq(self, t, s):
        return np.abs(np.asarray(t) - s) ** self._two_h

    def cross(self, t1, s1, t2, s2):
        e = self._two_h
        t1, s1, t2, s2 = (np.asarray(v, dtype=float) for v in (t1, s1, t2, s2))
        return 0.5 * (
            np.abs(t1 - s2) ** e + np.abs(s1 - t2) ** e - np.abs(t1 - t2) ** e - np.abs(s1 - s2) ** e
        )

    def gram_relative(self, t1, s1, dt, ds, width2):
        e = self._two_h
        width1 = np.asarray(t1, dtype=float) - s1
        dt, ds = np.asarray(dt, dtype=float), np.asarray(ds, dtype=float)
        cross = 0.5 * (
            np.abs(width1 - ds) ** e + np.abs(width1 + dt) ** e - np.abs(dt) ** e - np.abs(ds) ** e
        )
        return np.abs(width1) ** e, np.abs(width2) ** e, cross


@dataclass
class CallableCovariance(CovarianceModel):
    """Plug-in covariance built from two vectorized callables."""

    incr: Callable[[np.ndarray, np.ndarray], np.ndarray]
    cross_fn: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    T: float = 1.0
    bound: float = 1.0

    def incr_norm_sq(self, t, s):
        return self.incr(t, s)

    def cross(self, t1, s1, t2, s2):
        return self.cross_fn(t1, s1, t2, s2)


def fbm_covariance(params: FbmParams) -> FbmCovariance:
    return FbmCovariance(params)


def fbm_cross(params: FbmParams, t1: float, s1: float, t2: float, s2: float) -> float:
    """Covariance of the fBm increments over ``[s1, t1]`` and ``[s2, t2]``."""
    for v in (t1, s1, t2, s2):
        if not 0.0 <= v <= params.T:
            raise DomainError(f"times must lie in [0, {params.T}], got {v}")
    return float(FbmCovariance(params).cross(t1, s1, t2, s2))


def silt_pair_density(
    cov: CovarianceModel, t1: float, s1: float, t2: float, s2: float, lam: float
) -> float:
    """``1/(2 pi ||f|| ||g||) (1 - sigma**2 lam**4)**(-1/2)`` for one pair of increments.

    Returns ``math.inf`` when the radicand vanishes.

    Raises:
        SingularityError: An increment has zero norm.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    n1, n2, c = (float(v) for v in cov.gram(t1, s1, t2, s2))
    if n1 <= 0.0 or n2 <= 0.0:
        raise SingularityError(f"degenerate increment: norms^2 = ({n1}, {n2})")
    sigma_sq = c * c / (n1 * n2)
    if sigma_sq > 1.0 + 1e-12:
        raise DomainError(f"covariance violates Cauchy-Schwarz: sigma^2 = {sigma_sq}")
    radicand = 1.0 - sigma_sq * lam**4
    if radicand <= 0.0:
        return math.inf
    return 1.0 / (2.0 * math.pi * math.sqrt(n1 * n2 * radicand))


class GramIntegrand:
    """A 4-D integrand that sees the node only through ``(n1, n2, c)``.

    Non-finite values mark nodes where the Gram determinant vanished or went
    negative through roundoff; :func:`integrate_simplex4` drops them.
    """

    def __init__(self, cov: CovarianceModel, kernel: Callable[..., np.ndarray]):
        self.cov = cov
        self.kernel = kernel

    def __call__(self, t1, s1, t2, s2) -> np.ndarray:
        return self.kernel(*self.cov.gram(t1, s1, t2, s2))

    def relative(self, t1, s1, dt, ds, width2) -> np.ndarray:
        return self.kernel(*self.cov.gram_relative(t1, s1, dt, ds, width2))


def _on_positive(det: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    ok = det > 0.0
    return np.where(ok, fn(np.where(ok, det, 1.0)), np.nan)


def _bs_integrand(cov: CovarianceModel, lam: float) -> GramIntegrand:
    l4 = lam**4

    def kernel(n1, n2, c):
        return _on_positive(n1 * n2 - l4 * c * c, lambda det: 1.0 / (2.0 * math.pi * np.sqrt(det)))

    return GramIntegrand(cov, kernel)


def _d12_integrand(cov: CovarianceModel) -> GramIntegrand:
    def kernel(n1, n2, c):
        return _on_positive(n1 * n2 - c * c, lambda det: c * c / (math.pi * det**1.5))

    return GramIntegrand(cov, kernel)


def _intcon_integrand(cov: CovarianceModel) -> GramIntegrand:
    def kernel(n1, n2, c):
        return _on_positive(n1 * n2 - c * c, lambda det: det**-1.5)

    return GramIntegrand(cov, kernel)


def _gprime_integrand(cov: CovarianceModel) -> GramIntegrand:
    def kernel(n1, n2, c):
        return _on_positive(n1 * n2, lambda prod: 1.0 / np.sqrt(prod))

    return GramIntegrand(cov, kernel)


def _integrate(
    integrand: Integrand4,
    cov: CovarianceModel,
    mesh: MeshSpec,
    exclusion: Optional[ExclusionTube],
    method: Method,
    rtol: float,
    label: str,
) -> QuadratureResult:
    res = integrate_simplex4(integrand, cov.T, mesh, exclusion, method=method, rtol=rtol)
    if res.divergent:
        logger.info("%s: divergent on mesh %s (%s), criterion fails", label, mesh.describe(), dict(res.metadata))
    elif not res.converged:
        logger.warning(
            "%s: value %.6g unstable under refinement (error %.3g)", label, res.value, res.error_bound
        )
    return res


def silt_l2_criterion(
    cov: CovarianceModel,
    mesh: MeshSpec,
    *,
    exclusion: Optional[ExclusionTube] = None,
    method: Method = "duffy",
    rtol: float = 0.05,
) -> QuadratureResult:
    """``int 1/(2 pi sqrt(D))``: the ``lam -> 1`` limit of the Bargmann-Segal norm."""
    return _integrate(_bs_integrand(cov, 1.0), cov, mesh, exclusion, method, rtol, "L2 criterion")


def silt_d12_criterion(
    cov: CovarianceModel,
    mesh: MeshSpec,
    *,
    exclusion: Optional[ExclusionTube] = None,
    method: Method = "duffy",
    rtol: float = 0.05,
) -> QuadratureResult:
    """``int c**2 / (pi D**(3/2))``: the first lambda-derivative of ``B`` at ``lam = 1``."""
    return _integrate(_d12_integrand(cov), cov, mesh, exclusion, method, rtol, "D12 criterion")


def silt_intcon_criterion(
    cov: CovarianceModel,
    mesh: MeshSpec,
    *,
    exclusion: Optional[ExclusionTube] = None,
    rtol: float = 0.05,
) -> QuadratureResult:
    """``int D**(-3/2)``, the integrability condition for ``D^{1,2}``."""
    return _integrate(_intcon_integrand(cov), cov, mesh, exclusion, "duffy", rtol, "intcon")


def silt_gprime_bound(cov: CovarianceModel, mesh: MeshSpec, *, rtol: float = 0.05) -> QuadratureResult:
    """``int 1/(||f(t1,s1)|| ||f(t2,s2)||)``, which places the SILT in ``G'``."""
    return _integrate(_gprime_integrand(cov), cov, mesh, None, "duffy", rtol, "G' bound")


def fbm_gprime_closed_form(params: FbmParams) -> float:
    """The G' bound for fBm, ``(T**(2-H) / ((1-H)(2-H)))**2``."""
    h = params.H
    return (params.T ** (2.0 - h) / ((1.0 - h) * (2.0 - h))) ** 2


def silt_bs_norm(
    cov: CovarianceModel, lam: float, mesh: MeshSpec, *, rtol: float = 0.05
) -> QuadratureResult:
    """The SILT Bargmann-Segal norm ``int silt_pair_density(lam)`` at ``lam in [0, 1]``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    return _integrate(_bs_integrand(cov, lam), cov, mesh, None, "duffy", rtol, f"B({lam})")


def criterion_holds(res: QuadratureResult) -> bool:
    """A criterion holds when its integral is finite and stable under refinement."""
    return not res.divergent and res.converged


def silt_lambda_derivatives(a: float, b: float, x: float) -> tuple[float, float, float]:
    """First three derivatives of ``g(x) = (a - b x**4)**(-1/2)``.

    With ``u = a - b x**4``:

    * ``g'   = 2 b x**3 u**(-3/2)``
    * ``g''  = 6 b x**2 (a + b x**4) u**(-5/2)``
    * ``g''' = (12 a**2 b x + 84 a b**2 x**5 + 24 b**3 x**9) u**(-7/2)``

    Raises:
        DomainError: The radicand ``u`` is not positive.
    """
    u = a - b * x**4
    if u <= 0.0:
        raise DomainError(f"radicand a - b x^4 must be positive, got {u}")
    first = 2.0 * b * x**3 * u**-1.5
    second = 6.0 * b * x**2 * (a + b * x**4) * u**-2.5
    third = (12.0 * a * a * b * x + 84.0 * a * b * b * x**5 + 24.0 * b**3 * x**9) * u**-3.5
    return first, second, third


def silt_lambda_derivative(a: float, b: float, x: float, order: int = 1) -> float:
    if order not in (1, 2, 3):
        raise DomainError(f"derivative order must be 1, 2 or 3, got {order}")
    return silt_lambda_derivatives(a, b, x)[order - 1]
