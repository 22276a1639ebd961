"""Monte Carlo under the Bargmann-Segal measure ``nu``.

Coordinates of ``u = v + i w`` are independent with ``v_j, w_j ~ N(0, 1/2)``.
Samples are drawn in blocks, one PCG64 stream per block spawned from a single
``SeedSequence``; block ``b`` therefore depends only on ``(seed, b)`` and the
reduction runs in block order. Errors are jackknife estimates over the
blocks.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Mapping, Union

import numpy as np
from scipy import special

from chaos_regularity.chaos_core import ChaosProfile
from chaos_regularity.errors import DomainError, InputError

logger = logging.getLogger(__name__)

GENERATOR = "numpy.PCG64 via SeedSequence.spawn"
NORMALS = "Generator.standard_normal scaled by sqrt(1/2)"
DEFAULT_BLOCKS = 100


@dataclass(frozen=True, eq=False)
class ComplexGaussianBatch:
    """``count`` samples of ``nu`` on ``C**dim``, stored as a ``(count, dim)`` array."""

    dim: int
    count: int
    seed: int
    samples: np.ndarray = field(repr=False)
    block_edges: tuple[int, ...] = field(repr=False)

    @property
    def blocks(self) -> int:
        return len(self.block_edges) - 1

    def coordinate(self, j: int = 0) -> np.ndarray:
        return self.samples[:, j]

    def rotated(self, phase: float) -> ComplexGaussianBatch:
        """Every sample multiplied by ``exp(i phase)``."""
        rotated = self.samples * np.exp(1j * phase)
        rotated.flags.writeable = False
        return ComplexGaussianBatch(
            dim=self.dim,
            count=self.count,
            seed=self.seed,
            samples=rotated,
            block_edges=self.block_edges,
        )

    def metadata(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "generator": GENERATOR,
            "normals": NORMALS,
            "count": self.count,
            "dim": self.dim,
            "blocks": self.blocks,
        }


def sample_nu(
    dim: int, count: int, seed: int, *, blocks: int = DEFAULT_BLOCKS
) -> ComplexGaussianBatch:
    """Draw a reproducible batch from ``nu``; equal arguments give equal bits."""
    if dim < 1 or count < 1:
        raise InputError(f"dim and count must be positive, got dim={dim}, count={count}")
    blocks = max(1, min(blocks, count))
    sizes = [len(chunk) for chunk in np.array_split(np.empty(count), blocks)]
    scale = math.sqrt(0.5)
    parts = []
    for child, size in zip(np.random.SeedSequence(seed).spawn(blocks), sizes):
        rng = np.random.Generator(np.random.PCG64(child))
        normals = rng.standard_normal((size, 2 * dim)) * scale
        parts.append(normals[:, :dim] + 1j * normals[:, dim:])
    samples = np.concatenate(parts)
    samples.flags.writeable = False
    edges = tuple(int(e) for e in np.concatenate([[0], np.cumsum(sizes)]))
    logger.debug("sampled nu: dim=%d count=%d seed=%d blocks=%d", dim, count, seed, blocks)
    return ComplexGaussianBatch(
        dim=dim, count=count, seed=seed, samples=samples, block_edges=edges
    )


@dataclass(frozen=True, kw_only=True)
class MCEstimate:
    """Sample mean with its jackknife standard error."""

    value: Union[float, complex]
    standard_error: float
    count: int
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def within(self, target: Union[float, complex], multiple: float) -> bool:
        return abs(self.value - target) <= multiple * self.standard_error

    def se_multiple(self, target: Union[float, complex]) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.value == target else math.inf
        return abs(self.value - target) / self.standard_error


def jackknife(values: np.ndarray, block_edges: tuple[int, ...]) -> tuple[Union[float, complex], float]:
    """Mean of ``values`` and its delete-one-block jackknife standard error.

    Complex values get ``sqrt(var(Re) + var(Im))``.
    """
    sums = np.array(
        [values[a:b].sum() for a, b in zip(block_edges[:-1], block_edges[1:])]
    )
    counts = np.diff(np.asarray(block_edges))
    total, n = sums.sum(), counts.sum()
    mean = total / n
    nblocks = len(sums)
    if nblocks < 2:
        return mean, math.nan
    loo = (total - sums) / (n - counts)
    dev = loo - loo.mean()
    var = (nblocks - 1) / nblocks * float(np.sum(np.abs(dev) ** 2))
    if np.iscomplexobj(values):
        return complex(mean), math.sqrt(var)
    return float(np.real(mean)), math.sqrt(var)


def mc_monomial_moment(n: int, m: int, batch: ComplexGaussianBatch) -> MCEstimate:
    """Estimate ``E[z**n conj(z)**m]`` for the first coordinate ``z``; the target is ``n! delta_nm``."""
    if n < 0 or m < 0:
        raise InputError(f"moment orders must be non-negative, got n={n}, m={m}")
    z = batch.coordinate(0)
    values = z**n * np.conj(z) ** m
    mean, se = jackknife(values, batch.block_edges)
    return MCEstimate(
        value=complex(mean),
        standard_error=se,
        count=batch.count,
        metadata={"n": n, "m": m, **batch.metadata()},
    )


class STransformEvaluator(ABC):
    """Closed-form S-transform ``(lam, u) -> S Phi(lam u)``.

    ``dim`` is the number of coordinates read; ``variance_radius`` the
    ``lam`` below which ``|S Phi(lam u)|**2`` has finite variance under ``nu``.
    """

    name: str = "evaluator"
    dim: int = 1
    max_lambda: float = math.inf
    variance_radius: float = math.inf

    @abstractmethod
    def evaluate(self, lam: float, u: np.ndarray) -> np.ndarray:
        """Evaluate on a ``(count, dim)`` array of points."""

    def check(self, lam: float, batch: ComplexGaussianBatch) -> None:
        if batch.dim < self.dim:
            raise InputError(f"{self.name} needs dim >= {self.dim}, batch has {batch.dim}")
        if not 0.0 <= lam < self.max_lambda:
            raise DomainError(f"{self.name} is defined for 0 <= lambda < {self.max_lambda}, got {lam}")


class ConstantEvaluator(STransformEvaluator):
    name = "constant"

    def __init__(self, c: complex = 1.0):
        self.c = c

    def evaluate(self, lam: float, u: np.ndarray) -> np.ndarray:
        return np.full(u.shape[0], self.c, dtype=complex)


class PolynomialEvaluator(STransformEvaluator):
    """Finite chaos with rank-one kernels on the first coordinate.

    ``S Phi(h) = sum_n F_n <e_1, h>**n`` with ``F_n = sqrt(b_n / n!)``, so
    ``E|S Phi(lam u)|**2 = sum_n b_n lam**(2n)``.
    """

    name = "polynomial"

    def __init__(self, profile: ChaosProfile):
        if not profile.is_finite_support:
            raise InputError("polynomial evaluator needs a finite-support profile")
        b = np.asarray(profile.head, dtype=float)
        n = np.arange(len(b))
        with np.errstate(divide="ignore"):
            self.coefficients = np.exp(0.5 * (np.log(b) - special.gammaln(n + 1.0)))

    def evaluate(self, lam: float, u: np.ndarray) -> np.ndarray:
        z = lam * u[:, 0]
        # Horner in z
        out = np.zeros(u.shape[0], dtype=complex)
        for coef in self.coefficients[::-1]:
            out = out * z + coef
        return out


def mc_bs_norm(evaluator: STransformEvaluator, lam: float, batch: ComplexGaussianBatch) -> MCEstimate:
    """Estimate ``B(lam) = E|S Phi(lam u)|**2`` under ``nu``."""
    evaluator.check(lam, batch)
    if lam >= evaluator.variance_radius:
        logger.warning(
            "%s: lambda=%g is past the finite-variance radius %g; the standard error is unreliable",
            evaluator.name,
            lam,
            evaluator.variance_radius,
        )
    values = np.abs(evaluator.evaluate(lam, batch.samples)) ** 2
    mean, se = jackknife(values, batch.block_edges)
    return MCEstimate(
        value=float(mean),
        standard_error=se,
        count=batch.count,
        metadata={"evaluator": evaluator.name, "lambda": lam, **batch.metadata()},
    )
