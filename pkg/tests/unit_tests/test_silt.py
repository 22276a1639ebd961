import math

import numpy as np
import pytest

from chaos_regularity.errors import DomainError, SingularityError
from chaos_regularity.fractional_calc import central_difference
from chaos_regularity.models.silt import (
    CallableCovariance,
    FbmParams,
    _bs_integrand,
    _d12_integrand,
    _gprime_integrand,
    _intcon_integrand,
    criterion_holds,
    fbm_covariance,
    fbm_cross,
    fbm_gprime_closed_form,
    silt_bs_norm,
    silt_d12_criterion,
    silt_gprime_bound,
    silt_intcon_criterion,
    silt_l2_criterion,
    silt_lambda_derivative,
    silt_lambda_derivatives,
    silt_pair_density,
)
from chaos_regularity.quadrature import MeshSpec

EXACT_MESH = MeshSpec(8, 8, 1.0)


def constant_covariance(cross_value: float, T: float = 1.0) -> CallableCovariance:
    return CallableCovariance(
        incr=lambda t, s: np.ones(np.broadcast(t, s).shape),
        cross_fn=lambda t1, s1, t2, s2: np.full(np.broadcast(t1, s1, t2, s2).shape, cross_value),
        T=T,
    )


def test_fbm_cross_examples() -> None:
    brownian = FbmParams(H=0.5)
    assert fbm_cross(brownian, 1.0, 0.0, 0.75, 0.25) == pytest.approx(0.5)
    assert fbm_cross(brownian, 1.0, 0.6, 0.4, 0.0) == pytest.approx(0.0, abs=1e-15)
    rough = FbmParams(H=0.3)
    assert fbm_cross(rough, 0.8, 0.3, 0.8, 0.3) == pytest.approx(0.5**0.6)
    with pytest.raises(DomainError):
        fbm_cross(brownian, 1.5, 0.0, 0.5, 0.0)


def test_fbm_params_validation() -> None:
    with pytest.raises(ValueError):
        FbmParams(H=1.0)
    with pytest.raises(ValueError):
        FbmParams(H=0.5, T=0.0)


def test_pair_density() -> None:
    cov = fbm_covariance(FbmParams(H=0.5))
    assert silt_pair_density(cov, 1.0, 0.0, 0.75, 0.25, 1.0) == pytest.approx(1.0 / math.pi)
    assert silt_pair_density(cov, 1.0, 0.0, 0.75, 0.25, 0.0) == pytest.approx(
        1.0 / (2.0 * math.pi * math.sqrt(0.5))
    )
    # disjoint Brownian increments decouple at every lambda
    assert silt_pair_density(cov, 1.0, 0.6, 0.4, 0.0, 0.8) == pytest.approx(
        1.0 / (2.0 * math.pi * 0.4)
    )
    assert silt_pair_density(cov, 0.7, 0.2, 0.7, 0.2, 1.0) == math.inf


def test_pair_density_rejects() -> None:
    cov = fbm_covariance(FbmParams(H=0.5))
    with pytest.raises(SingularityError):
        silt_pair_density(cov, 0.5, 0.5, 0.75, 0.25, 0.5)
    with pytest.raises(DomainError):
        silt_pair_density(cov, 1.0, 0.0, 0.75, 0.25, 1.5)


@pytest.mark.parametrize("H", [0.1, 0.3, 0.5, 0.75, 0.9])
def test_fbm_cauchy_schwarz(H: float) -> None:
    rng = np.random.default_rng(11)
    t1, s1, t2, s2 = rng.uniform(0.0, 1.0, size=(4, 100_000))
    cov = fbm_covariance(FbmParams(H=H))
    n1, n2, c = cov.gram(t1, s1, t2, s2)
    assert np.all(c * c <= n1 * n2 * (1.0 + 1e-9) + 1e-15)


@pytest.mark.parametrize(
    "integrand",
    [
        lambda cov: _bs_integrand(cov, 0.7),
        _d12_integrand,
        _intcon_integrand,
        _gprime_integrand,
    ],
)
def test_integrands_symmetric_under_pair_swap(integrand) -> None:
    rng = np.random.default_rng(5)
    t1, t2 = rng.uniform(0.1, 1.0, size=(2, 2000))
    s1, s2 = t1 * rng.uniform(0.0, 0.9, 2000), t2 * rng.uniform(0.0, 0.9, 2000)
    f = integrand(fbm_covariance(FbmParams(H=0.7)))
    np.testing.assert_allclose(f(t1, s1, t2, s2), f(t2, s2, t1, s1), rtol=1e-12)


def test_decoupled_covariance_criteria() -> None:
    cov = constant_covariance(0.0, T=2.0)
    l2 = silt_l2_criterion(cov, EXACT_MESH)
    assert l2.value == pytest.approx(2.0**4 / (8.0 * math.pi), rel=1e-6)
    assert criterion_holds(l2)
    assert silt_d12_criterion(cov, EXACT_MESH).value == 0.0
    assert silt_intcon_criterion(cov, EXACT_MESH).value == pytest.approx(4.0, rel=1e-10)
    assert silt_gprime_bound(cov, EXACT_MESH).value == pytest.approx(4.0, rel=1e-10)
    assert silt_bs_norm(cov, 0.5, EXACT_MESH).value == pytest.approx(2.0 / math.pi, rel=1e-10)


def test_fully_correlated_covariance_diverges() -> None:
    cov = constant_covariance(1.0)
    res = silt_l2_criterion(cov, EXACT_MESH)
    assert res.divergent
    assert not criterion_holds(res)
    assert silt_intcon_criterion(cov, EXACT_MESH).divergent
    # lambda below one keeps the radicand positive
    assert silt_bs_norm(cov, 0.5, EXACT_MESH).value == pytest.approx(
        0.25 / (2.0 * math.pi * math.sqrt(1.0 - 0.5**4)), rel=1e-10
    )


def test_bs_norm_domain() -> None:
    with pytest.raises(DomainError):
        silt_bs_norm(constant_covariance(0.0), 1.5, EXACT_MESH)


def test_gprime_closed_form() -> None:
    assert fbm_gprime_closed_form(FbmParams(H=0.5)) == pytest.approx((4.0 / 3.0) ** 2)
    assert fbm_gprime_closed_form(FbmParams(H=0.5, T=2.0)) == pytest.approx(
        (2.0**1.5 * 4.0 / 3.0) ** 2
    )


def test_relative_gram_matches_absolute() -> None:
    rng = np.random.default_rng(9)
    t1, t2 = rng.uniform(0.1, 1.0, size=(2, 500))
    s1, s2 = t1 * rng.uniform(0.0, 0.9, 500), t2 * rng.uniform(0.0, 0.9, 500)
    for H in (0.3, 0.5, 0.75):
        cov = fbm_covariance(FbmParams(H=H))
        absolute = cov.gram(t1, s1, t2, s2)
        relative = cov.gram_relative(t1, s1, t2 - t1, s2 - s1, t2 - s2)
        for a, r in zip(absolute, relative):
            np.testing.assert_allclose(r, a, rtol=1e-10, atol=1e-14)


def test_relative_gram_resolves_nearly_equal_increments() -> None:
    cov = fbm_covariance(FbmParams(H=0.75))
    t1, s1 = 0.5, 0.5 - 1e-7
    width1 = t1 - s1
    dt, ds = 1e-15, -2e-15
    n1, n2, c = cov.gram_relative(t1, s1, dt, ds, width1 + dt - ds)
    det = float(n1 * n2 - c * c)
    # D ~ L**2H (|dt|**2H + |ds|**2H) as the increments merge
    expected = width1**1.5 * (abs(dt) ** 1.5 + abs(ds) ** 1.5)
    assert det == pytest.approx(expected, rel=1e-2)


@pytest.mark.parametrize("H", [0.3, 0.5, 0.75])
def test_fbm_l2_criterion_is_finite_on_coarse_mesh(H: float) -> None:
    res = silt_l2_criterion(fbm_covariance(FbmParams(H=H)), MeshSpec(6, 6, 3.0))
    assert not res.divergent, res
    assert res.metadata["dropped"] <= 1e-6
    assert math.isfinite(res.value) and res.value > 0.0


@pytest.mark.slow
@pytest.mark.parametrize("H", [0.3, 0.5, 0.75])
def test_fbm_l2_criterion_is_stable(H: float) -> None:
    res = silt_l2_criterion(fbm_covariance(FbmParams(H=H)), MeshSpec())
    assert criterion_holds(res), res
    assert res.error_bound <= 0.05 * res.value


@pytest.mark.slow
@pytest.mark.parametrize("H", [0.3, 0.5])
def test_fbm_d12_criterion_is_stable(H: float) -> None:
    res = silt_d12_criterion(fbm_covariance(FbmParams(H=H)), MeshSpec())
    assert criterion_holds(res), res
    assert res.error_bound <= 0.05 * res.value


@pytest.mark.slow
def test_fbm_d12_criterion_fails_above_two_thirds() -> None:
    # c**2 / D**1.5 ~ r**(-3H) next to coinciding increments: not integrable
    # over the two transverse directions once 3H >= 2
    res = silt_d12_criterion(fbm_covariance(FbmParams(H=0.75)), MeshSpec())
    assert not criterion_holds(res)


@pytest.mark.slow
def test_fbm_gprime_bound_matches_closed_form() -> None:
    params = FbmParams(H=0.5)
    res = silt_gprime_bound(fbm_covariance(params), MeshSpec())
    assert res.value == pytest.approx(fbm_gprime_closed_form(params), rel=1e-2)


def test_lambda_derivative_examples() -> None:
    assert silt_lambda_derivative(2.0, 1.0, 0.5) == pytest.approx(0.25 / 1.9375**1.5)
    assert silt_lambda_derivative(2.0, 1.0, 0.5) == pytest.approx(0.092703, rel=1e-4)
    assert silt_lambda_derivatives(1.5, 0.0, 0.4) == (0.0, 0.0, 0.0)


def test_lambda_derivatives_match_finite_differences() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(20):
        a = float(rng.uniform(0.5, 2.0))
        b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.0))
        x = float(rng.uniform(0.2, 0.9))
        if a - b * x**4 < 0.2:
            b = -b
        first, second, third = silt_lambda_derivatives(a, b, x)

        def g(y: float) -> float:
            return (a - b * y**4) ** -0.5

        def d1(y: float) -> float:
            return silt_lambda_derivative(a, b, y, 1)

        def d2(y: float) -> float:
            return silt_lambda_derivative(a, b, y, 2)

        assert first == pytest.approx(central_difference(g, x, 1e-4), rel=1e-5, abs=1e-8)
        assert second == pytest.approx(central_difference(d1, x, 1e-4), rel=1e-5, abs=1e-8)
        assert third == pytest.approx(central_difference(d2, x, 1e-4), rel=1e-5, abs=1e-8)


def test_lambda_derivative_rejects() -> None:
    with pytest.raises(DomainError):
        silt_lambda_derivatives(1.0, 2.0, 0.9)
    with pytest.raises(DomainError):
        silt_lambda_derivative(1.0, 0.5, 0.3, order=4)
