"""Numerical integration shared by the fractional operators and the models.

Three drivers live here:

* :func:`integrate_1d` wraps QUADPACK and absorbs declared algebraic and
  logarithmic endpoint singularities through its weighted (QAWS) rules.
* :func:`integrate_2d_gaussian` integrates Gaussian-decaying integrands on
  the plane with a composite tensor Gauss-Legendre rule.
* :func:`integrate_simplex4` integrates over the product of two triangles
  ``{0 < s1 < t1 < T} x {0 < s2 < t2 < T}`` with Duffy-graded coordinates
  centred on the diagonal singular set.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Mapping, Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate
from scipy.stats import qmc

from chaos_regularity.errors import DomainError, InputError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
QUAD_LIMIT = 200
_CHUNK = 256
# dropped nodes above this share of the domain mean f is undefined on a set
# of positive measure
DROPPED_MEASURE_LIMIT = 1e-6
DIVERGENCE_GROWTH = 0.25

Integrand4 = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, kw_only=True)
class QuadratureResult:
    """Value of an integral with its error estimate.

    ``divergent`` marks integrands that produced non-finite values; the value
    is then ``math.inf``.
    """

    value: float
    error_bound: float
    evaluations: int
    converged: bool
    divergent: bool = False
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def diverged(cls, evaluations: int = 0, **metadata: Any) -> QuadratureResult:
        return cls(
            value=math.inf,
            error_bound=math.inf,
            evaluations=evaluations,
            converged=False,
            divergent=True,
            metadata=metadata,
        )


@dataclass(frozen=True)
class Singularity:
    """Endpoint behaviour multiplied onto the integrand by :func:`integrate_1d`.

    ``power`` means ``|x - e|**exponent``, ``log`` means ``log|x - e|`` and
    ``power_log`` their product, ``e`` being the declared endpoint.
    """

    kind: Literal["none", "power", "log", "power_log"] = "none"
    exponent: float = 0.0
    endpoint: Literal["left", "right"] = "left"

    @classmethod
    def power(cls, exponent: float, endpoint: Literal["left", "right"] = "left") -> Singularity:
        return cls("power", exponent, endpoint)

    @classmethod
    def log(
        cls, endpoint: Literal["left", "right"] = "left", exponent: float = 0.0
    ) -> Singularity:
        return cls("power_log" if exponent else "log", exponent, endpoint)


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    singularity: Optional[Singularity] = None,
    *,
    tol: float = DEFAULT_TOL,
    limit: int = QUAD_LIMIT,
) -> QuadratureResult:
    """Integrate ``f(x) * s(x)`` over ``[a, b]``.

    Args:
        f: The regular part of the integrand.
        a: Lower limit.
        b: Upper limit, ``a < b``.
        singularity: The endpoint weight ``s``; ``None`` means ``s = 1``.
        tol: Absolute and relative tolerance handed to QUADPACK.
        limit: Maximum number of bisection panels.

    Returns:
        The integral; ``converged`` is False when QUADPACK gave up or the
        error estimate exceeds the tolerance.
    """
    if not a < b:
        raise DomainError(f"integration limits must satisfy a < b, got [{a}, {b}]")
    sing = singularity or Singularity()
    kwargs: dict[str, Any] = {}
    if sing.kind != "none":
        if sing.exponent <= -1.0:
            raise DomainError(f"power singularity exponent must exceed -1, got {sing.exponent}")
        left = sing.endpoint == "left"
        kwargs["wvar"] = (sing.exponent, 0.0) if left else (0.0, sing.exponent)
        if sing.kind == "power":
            kwargs["weight"] = "alg"
        else:
            kwargs["weight"] = "alg-loga" if left else "alg-logb"

    out = integrate.quad(
        f, a, b, full_output=1, epsabs=tol, epsrel=tol, limit=limit, **kwargs
    )
    value, abserr, info = out[0], out[1], out[2]
    clean = len(out) == 3
    if not math.isfinite(value):
        return QuadratureResult.diverged(evaluations=info.get("neval", 0))
    converged = clean and abserr <= max(tol, tol * abs(value))
    if not converged:
        logger.debug(
            "quad on [%g, %g] did not converge: value=%r abserr=%r message=%s",
            a,
            b,
            value,
            abserr,
            out[3] if len(out) > 3 else "",
        )
    return QuadratureResult(
        value=float(value),
        error_bound=float(abserr),
        evaluations=int(info.get("neval", 0)),
        converged=converged,
    )


@functools.lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = legendre.leggauss(order)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


@functools.lru_cache(maxsize=64)
def graded_rule(order: int, grading: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on ``[0, 1]`` pulled through ``z**q / (z**q + (1-z)**q)``.

    The map clusters nodes at both ends; ``grading = 1`` is the identity.
    """
    z, w = gauss_legendre(order)
    q = float(grading)
    zq, rq = z**q, (1.0 - z) ** q
    denom = zq + rq
    nodes = zq / denom
    weights = w * q * z ** (q - 1.0) * (1.0 - z) ** (q - 1.0) / denom**2
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def composite_rule(a: float, b: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    widths = np.diff(edges)
    nodes = (edges[:-1, None] + widths[:, None] * z[None, :]).ravel()
    weights = (widths[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_2d_gaussian(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    decay: float = 0.5,
    tol: float = DEFAULT_TOL,
    order: int = 20,
    max_panels: int = 64,
) -> QuadratureResult:
    """Integrate ``f`` over the plane, ``|f(x, y)| <~ exp(-decay (x**2 + y**2))``.

    The plane is truncated to ``[-R, R]**2`` with ``exp(-decay R**2) < tol/10``
    and the panel count doubles until two successive rules agree.
    """
    if decay <= 0.0:
        raise DomainError(f"decay must be positive, got {decay}")
    radius = math.sqrt(math.log(10.0 / tol) / decay) + 1.0
    prev: Optional[float] = None
    value, change, evaluations = 0.0, math.inf, 0
    panels = 4
    while panels <= max_panels:
        x, w = composite_rule(-radius, radius, panels, order)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        with np.errstate(over="ignore", invalid="ignore"):
            vals = f(xx, yy)
        evaluations += xx.size
        value = float(np.sum(vals * np.outer(w, w)))
        if not math.isfinite(value):
            return QuadratureResult.diverged(evaluations=evaluations, radius=radius)
        if prev is not None:
            change = abs(value - prev)
            if change <= tol * max(1.0, abs(value)):
                break
        prev = value
        panels *= 2

    edge = np.linspace(-radius, radius, 4 * order + 1)
    boundary = np.concatenate(
        [
            f(edge, np.full_like(edge, radius)),
            f(edge, np.full_like(edge, -radius)),
            f(np.full_like(edge, radius), edge),
            f(np.full_like(edge, -radius), edge),
        ]
    )
    boundary_max = float(np.max(np.abs(boundary)))
    converged = change <= tol * max(1.0, abs(value)) and boundary_max <= tol
    if boundary_max > tol:
        logger.warning(
            "integrand does not decay as declared: |f| = %.3g on the truncation boundary",
            boundary_max,
        )
    return QuadratureResult(
        value=value,
        error_bound=max(change, boundary_max),
        evaluations=evaluations,
        converged=converged,
        metadata={"radius": radius, "panels": min(panels, max_panels)},
    )


@dataclass(frozen=True)
class MeshSpec:
    """Node counts of the 4-D simplex rule: ``outer:inner:grading``."""

    outer: int = 16
    inner: int = 16
    grading: float = 3.0

    def __post_init__(self) -> None:
        if self.outer < 1 or self.inner < 1 or self.grading < 1.0:
            raise InputError(f"invalid mesh {self.describe()}")

    @classmethod
    def parse(cls, text: str) -> MeshSpec:
        parts = text.split(":")
        try:
            if len(parts) == 2:
                return cls(int(parts[0]), int(parts[1]))
            if len(parts) == 3:
                return cls(int(parts[0]), int(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise InputError(f"invalid mesh spec {text!r}: {exc}") from exc
        raise InputError(f"mesh spec must be 'outer:inner[:grading]', got {text!r}")

    def refined(self, factor: float = 1.5) -> MeshSpec:
        return MeshSpec(
            math.ceil(self.outer * factor), math.ceil(self.inner * factor), self.grading
        )

    def describe(self) -> str:
        return f"{self.outer}:{self.inner}:{self.grading:g}"


@dataclass(frozen=True)
class ExclusionTube:
    """Radii of the disc cut around the singular point, largest first.

    Successive radii must shrink by a constant ratio for the extrapolation.
    """

    radii: tuple[float, float, float] = (1e-2, 5e-3, 2.5e-3)

    def __post_init__(self) -> None:
        r0, r1, r2 = self.radii
        if not r0 > r1 > r2 > 0.0 or not math.isclose(r0 / r1, r1 / r2, rel_tol=1e-9):
            raise InputError(f"exclusion radii must shrink geometrically, got {self.radii}")


def integrate_triangle(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    T: float,
    order: int,
    grading: float = 1.0,
) -> float:
    """Integrate ``f(t, s)`` over ``{0 < s < t < T}``."""
    t, s, w = _triangle_nodes(T, order, grading)
    return float(np.sum(f(t, s) * w))


def _triangle_nodes(T: float, order: int, grading: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z, wz = graded_rule(order, grading)
    u, v = np.meshgrid(z, z, indexing="ij")
    wu, wv = np.meshgrid(wz, wz, indexing="ij")
    t = T * u
    return t.ravel(), (t * v).ravel(), (T * T * u * wu * wv).ravel()


@functools.lru_cache(maxsize=64)
def _graded_gaps(order: int, grading: float) -> np.ndarray:
    """``1 - graded_rule(order, grading)[0]`` without cancellation near 1."""
    z, _ = gauss_legendre(order)
    zq, rq = z**grading, (1.0 - z) ** grading
    gaps = rq / (zq + rq)
    gaps.flags.writeable = False
    return gaps


@dataclass(frozen=True)
class _DuffyValue:
    value: float
    evaluations: int
    # share of the domain's measure carried by nodes where f was not finite
    dropped: float


def integrate_simplex4(
    f: Integrand4,
    T: float,
    mesh: MeshSpec,
    exclusion: Optional[ExclusionTube] = None,
    *,
    method: Literal["duffy", "qmc"] = "duffy",
    rtol: float = 0.05,
    divergence_growth: float = DIVERGENCE_GROWTH,
    seed: int = 0,
    qmc_log2: int = 14,
    replicates: int = 8,
) -> QuadratureResult:
    """Integrate ``f(t1, s1, t2, s2)`` over two copies of ``{0 < s < t < T}``.

    ``f`` must be vectorized and is expected to be singular only where the
    second interval coincides with the first. The Duffy rule evaluates on
    ``mesh`` and on ``mesh.refined()``; the difference is the error bound.

    Integrands that also define ``f.relative(t1, s1, dt, ds, width2)`` are
    evaluated through it inside the Duffy rule, with ``dt = t2 - t1``,
    ``ds = s2 - s1`` and ``width2 = t2 - s2`` formed without subtracting
    nearby absolute times.

    Nodes where ``f`` is not finite are dropped. The integral is divergent
    when dropped nodes carry more than ``DROPPED_MEASURE_LIMIT`` of the
    domain, or when a positive value grows by more than ``divergence_growth``
    under refinement.

    Args:
        f: Vectorized integrand.
        T: Horizon.
        mesh: Node counts and grading of the Duffy rule.
        exclusion: Optional tube around the singular point, removed and
            extrapolated away.
        method: ``"duffy"`` or the scrambled Sobol cross-check ``"qmc"``.
        rtol: Relative error accepted as converged.
        divergence_growth: Relative growth under one refinement read as
            divergence of a non-negative integrand.
        seed: Seed of the Sobol scrambling.
        qmc_log2: Base-2 logarithm of the Sobol points per replicate.
        replicates: Independent Sobol replicates.

    Returns:
        The integral, or its divergent variant.
    """
    if T <= 0.0:
        raise DomainError(f"horizon must be positive, got {T}")
    if method == "qmc":
        return _simplex4_qmc(f, T, seed=seed, log2=qmc_log2, replicates=replicates, rtol=rtol)

    levels = (mesh, mesh.refined())
    results = []
    evaluations = 0
    for level in levels:
        if exclusion is None:
            duffy = _simplex4_duffy(f, T, level, 0.0)
            results.append((duffy.value, 0.0, False, {}))
        else:
            duffy, err, flagged, meta = _tube_extrapolate(f, T, level, exclusion)
            results.append((duffy.value, err, flagged, meta))
        evaluations += duffy.evaluations
        if not math.isfinite(duffy.value) or duffy.dropped > DROPPED_MEASURE_LIMIT:
            logger.debug(
                "simplex integrand is not finite on mesh %s (dropped measure %.3g)",
                level.describe(),
                duffy.dropped,
            )
            return QuadratureResult.diverged(
                evaluations=evaluations, mesh=level.describe(), dropped=duffy.dropped
            )

    (coarse, _, _, _), (fine, tube_err, flagged, meta) = results
    if coarse > 0.0 and fine > (1.0 + divergence_growth) * coarse:
        logger.debug(
            "simplex integral grows under refinement on %s: %r -> %r", mesh.describe(), coarse, fine
        )
        return QuadratureResult.diverged(
            evaluations=evaluations, mesh=mesh.describe(), coarse=coarse, fine=fine
        )
    error = max(abs(fine - coarse), tube_err)
    converged = not flagged and error <= rtol * abs(fine)
    logger.debug(
        "simplex4 on %s: coarse=%r fine=%r error=%r", mesh.describe(), coarse, fine, error
    )
    return QuadratureResult(
        value=fine,
        error_bound=error,
        evaluations=evaluations,
        converged=converged,
        metadata={
            "mesh": mesh.describe(),
            "refined": levels[1].describe(),
            "dropped": duffy.dropped,
            **meta,
        },
    )


def _simplex4_duffy(f: Integrand4, T: float, mesh: MeshSpec, eps: float) -> _DuffyValue:
    t1, s1, w1 = _triangle_nodes(T, mesh.outer, mesh.grading)
    # exact for the stored nodes whenever s1 >= t1 / 2
    width1 = t1 - s1
    rho_z, rho_w = graded_rule(mesh.inner, mesh.grading)
    rho_gaps = _graded_gaps(mesh.inner, mesh.grading)
    tau, tau_w = gauss_legendre(mesh.inner)
    corners = np.array([[0.0, 0.0], [T, 0.0], [T, T]])
    corner_widths = corners[:, 0] - corners[:, 1]
    relative = getattr(f, "relative", None)
    partial = np.empty(len(t1))
    lost = np.empty(len(t1))
    evaluations = 0

    for start in range(0, len(t1), _CHUNK):
        sl = slice(start, start + _CHUNK)
        p = np.stack([t1[sl], s1[sl]], axis=-1)
        acc = np.zeros(len(p))
        acc_lost = np.zeros(len(p))
        for a, b in ((0, 1), (1, 2), (2, 0)):
            va, vb = corners[a], corners[b]
            # Duffy coordinates X = P + rho (E(tau) - P), Jacobian rho |cross|
            edge = va + tau[:, None] * (vb - va)
            edge_width = corner_widths[a] + tau * (corner_widths[b] - corner_widths[a])
            d = edge[None, :, :] - p[:, None, :]
            da, db = va - p, vb - p
            cross = np.abs(da[:, 0] * db[:, 1] - da[:, 1] * db[:, 0])
            if eps > 0.0:
                rho0 = np.minimum(1.0, eps / np.hypot(d[..., 0], d[..., 1]))
            else:
                rho0 = np.zeros(d.shape[:2])
            span = 1.0 - rho0
            rho = rho0[..., None] + span[..., None] * rho_z
            dt = rho * d[..., None, 0]
            ds = rho * d[..., None, 1]
            weight = rho * span[..., None] * rho_w * tau_w[None, :, None] * cross[:, None, None]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                if relative is not None:
                    # t2 - s2 = (1 - rho)(t1 - s1) + rho (e_t - e_s)
                    width2 = (
                        span[..., None] * rho_gaps * width1[sl, None, None]
                        + rho * edge_width[None, :, None]
                    )
                    args = np.broadcast_arrays(p[:, None, None, 0], p[:, None, None, 1], dt, ds, width2)
                    vals = relative(*args)
                else:
                    t2 = p[:, None, None, 0] + dt
                    s2 = p[:, None, None, 1] + ds
                    vals = f(*np.broadcast_arrays(p[:, None, None, 0], p[:, None, None, 1], t2, s2))
                vals = np.broadcast_to(vals, weight.shape)
                finite = np.isfinite(vals)
                contrib = np.where(finite & (weight > 0.0), vals * weight, 0.0)
            evaluations += weight.size
            acc += contrib.sum(axis=(1, 2))
            acc_lost += np.where(finite, 0.0, weight).sum(axis=(1, 2))
        partial[sl] = acc
        lost[sl] = acc_lost
    with np.errstate(invalid="ignore", over="ignore"):
        total = float(np.sum(partial * w1))
    if math.isnan(total):
        total = math.inf
    dropped = float(np.sum(lost * w1)) / (0.25 * T**4)
    return _DuffyValue(value=total, evaluations=evaluations, dropped=dropped)


def _tube_extrapolate(
    f: Integrand4, T: float, mesh: MeshSpec, tube: ExclusionTube
) -> tuple[_DuffyValue, float, bool, dict]:
    values, evaluations, dropped = [], 0, 0.0
    for eps in tube.radii:
        duffy = _simplex4_duffy(f, T, mesh, eps)
        values.append(duffy.value)
        evaluations += duffy.evaluations
        dropped = max(dropped, duffy.dropped)

    def result(value: float) -> _DuffyValue:
        return _DuffyValue(value=value, evaluations=evaluations, dropped=dropped)

    if not all(math.isfinite(v) for v in values):
        return result(math.inf), math.inf, True, {}
    v0, v1, v2 = values
    d1, d2 = v1 - v0, v2 - v1
    if d1 == 0.0 and d2 == 0.0:
        return result(v2), 0.0, False, {"tube": list(values)}
    if d1 * d2 <= 0.0 or abs(d2) >= abs(d1):
        logger.warning("exclusion-tube values are not monotone: %s", values)
        return result(v2), abs(d2), True, {"tube": list(values), "non_monotone": True}
    ratio = d1 / d2
    gamma = math.log(ratio) / math.log(tube.radii[0] / tube.radii[1])
    extrapolated = v2 + d2 / (ratio - 1.0)
    meta = {"tube": list(values), "tube_exponent": gamma}
    return result(extrapolated), abs(d2), False, meta


def _simplex4_qmc(
    f: Integrand4, T: float, *, seed: int, log2: int, replicates: int, rtol: float
) -> QuadratureResult:
    estimates = []
    for child in np.random.SeedSequence(seed).spawn(replicates):
        sampler = qmc.Sobol(d=4, scramble=True, seed=np.random.Generator(np.random.PCG64(child)))
        x = sampler.random_base2(log2)
        t1 = T * x[:, 0]
        t2 = T * x[:, 2]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = f(t1, t1 * x[:, 1], t2, t2 * x[:, 3]) * (T**4 * x[:, 0] * x[:, 2])
        estimates.append(float(np.mean(vals)))
    evaluations = replicates * 2**log2
    est = np.asarray(estimates)
    if not np.all(np.isfinite(est)):
        return QuadratureResult.diverged(evaluations=evaluations, method="qmc")
    value = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(replicates))
    return QuadratureResult(
        value=value,
        error_bound=3.0 * se,
        evaluations=evaluations,
        converged=3.0 * se <= rtol * abs(value),
        metadata={"method": "qmc", "seed": seed, "replicates": replicates, "points": 2**log2},
    )
