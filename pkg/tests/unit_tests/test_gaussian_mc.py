import logging
import math

import numpy as np
import pytest

from chaos_regularity.chaos_core import ChaosProfile, GeometricPolynomial, bs_norm_sq
from chaos_regularity.errors import DomainError, InputError
from chaos_regularity.gaussian_mc import (
    GENERATOR,
    ConstantEvaluator,
    MCEstimate,
    PolynomialEvaluator,
    jackknife,
    mc_bs_norm,
    mc_monomial_moment,
    sample_nu,
)
from chaos_regularity.models.donsker import DonskerSpec, donsker_evaluator

SE_GATE = 5.0
MOMENT_GATE = 4.0


@pytest.fixture(scope="module")
def batch():
    return sample_nu(1, 1_000_000, 42)


def test_same_seed_same_bits() -> None:
    a = sample_nu(2, 5000, 42, blocks=10)
    b = sample_nu(2, 5000, 42, blocks=10)
    assert np.array_equal(a.samples, b.samples)
    assert a.block_edges == b.block_edges
    assert not np.array_equal(a.samples, sample_nu(2, 5000, 43, blocks=10).samples)


def test_batch_metadata() -> None:
    meta = sample_nu(1, 10, 5, blocks=100).metadata()
    assert meta["seed"] == 5
    assert meta["generator"] == GENERATOR
    assert meta["count"] == 10
    # never more blocks than samples
    assert meta["blocks"] == 10


def test_sample_nu_rejects() -> None:
    with pytest.raises(InputError):
        sample_nu(0, 10, 1)
    with pytest.raises(InputError):
        sample_nu(1, 0, 1)


def test_coordinate_moments(batch) -> None:
    z = batch.coordinate(0)
    assert abs(z.real.mean()) < 0.005
    assert abs(z.imag.mean()) < 0.005
    assert z.real.var() == pytest.approx(0.5, abs=0.005)
    assert z.imag.var() == pytest.approx(0.5, abs=0.005)
    assert abs(np.mean(z.real * z.imag)) < 0.005


def test_rotation(batch) -> None:
    rotated = batch.rotated(math.pi / 3)
    np.testing.assert_allclose(rotated.samples, batch.samples * np.exp(1j * math.pi / 3))
    assert rotated.block_edges == batch.block_edges


@pytest.mark.parametrize("n", range(6))
@pytest.mark.parametrize("m", range(6))
def test_monomial_orthogonality(batch, n: int, m: int) -> None:
    est = mc_monomial_moment(n, m, batch)
    target = math.factorial(n) if n == m else 0.0
    assert est.within(target, MOMENT_GATE), (est.value, est.standard_error)
    assert est.metadata["n"] == n and est.metadata["seed"] == 42


@pytest.mark.slow
def test_sixth_moment_at_ten_million_samples() -> None:
    big = sample_nu(1, 10_000_000, 42)
    est = mc_monomial_moment(6, 6, big)
    assert est.within(720.0, MOMENT_GATE), (est.value, est.standard_error)
    assert est.count == 10_000_000


@pytest.mark.parametrize("n", range(6))
def test_diagonal_moments_are_rotation_invariant(batch, n: int) -> None:
    phase = 0.7
    rotated = batch.rotated(phase)
    assert mc_monomial_moment(n, n, rotated).value == pytest.approx(
        mc_monomial_moment(n, n, batch).value, rel=1e-9
    )
    # off the diagonal the estimate turns with the samples
    off = mc_monomial_moment(n + 1, n, batch).value * np.exp(1j * phase)
    assert mc_monomial_moment(n + 1, n, rotated).value == pytest.approx(off, rel=1e-9, abs=1e-12)


def test_monomial_rejects_negative_order(batch) -> None:
    with pytest.raises(InputError):
        mc_monomial_moment(-1, 0, batch)


def test_jackknife() -> None:
    mean, se = jackknife(np.ones(100), (0, 50, 100))
    assert mean == 1.0 and se == 0.0
    mean, se = jackknife(np.arange(4.0), (0, 4))
    assert mean == 1.5 and math.isnan(se)
    # iid blocks of a known-variance sequence
    values = np.random.default_rng(0).standard_normal(100_000)
    edges = tuple(range(0, 100_001, 1000))
    _, se = jackknife(values, edges)
    assert se == pytest.approx(1.0 / math.sqrt(100_000), rel=0.25)


def test_estimate_helpers() -> None:
    est = MCEstimate(value=1.1, standard_error=0.05, count=100)
    assert est.se_multiple(1.0) == pytest.approx(2.0)
    assert est.within(1.0, 2.5)
    assert not est.within(1.0, 1.5)
    exact = MCEstimate(value=4.0, standard_error=0.0, count=1)
    assert exact.se_multiple(4.0) == 0.0
    assert exact.se_multiple(3.0) == math.inf


def test_constant_evaluator(batch) -> None:
    est = mc_bs_norm(ConstantEvaluator(2.0), 0.7, batch)
    assert est.value == pytest.approx(4.0)
    assert est.standard_error == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.3, 0.6, 0.9])
def test_polynomial_evaluator_matches_norm(batch, lam: float) -> None:
    profile = ChaosProfile(head=(1.0, 0.5, 0.25, 2.0))
    est = mc_bs_norm(PolynomialEvaluator(profile), lam, batch)
    assert est.within(bs_norm_sq(profile, lam).value, SE_GATE)
    assert est.metadata["evaluator"] == "polynomial"


def test_polynomial_evaluator_needs_finite_support() -> None:
    with pytest.raises(InputError):
        PolynomialEvaluator(ChaosProfile(head=(1.0,), tail=GeometricPolynomial(C=1, rho=0.5, p=0)))


def test_evaluator_checks(batch) -> None:
    evaluator = donsker_evaluator(DonskerSpec(d=2))
    with pytest.raises(InputError):
        mc_bs_norm(evaluator, 0.5, batch)
    with pytest.raises(DomainError):
        mc_bs_norm(donsker_evaluator(DonskerSpec(d=1)), 1.0, batch)


def test_warns_past_variance_radius(batch, caplog: pytest.LogCaptureFixture) -> None:
    evaluator = donsker_evaluator(DonskerSpec(d=1))
    with caplog.at_level(logging.WARNING, logger="chaos_regularity.gaussian_mc"):
        mc_bs_norm(evaluator, 0.8, batch)
    assert "finite-variance radius" in caplog.text
