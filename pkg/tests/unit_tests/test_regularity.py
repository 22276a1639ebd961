import math

import numpy as np
import pytest

from chaos_regularity.chaos_core import ChaosProfile, FiniteSupport, GeometricPolynomial
from chaos_regularity.errors import ConsistencyError, DomainError, InputError
from chaos_regularity.models.donsker import DonskerSpec, donsker_chaos_profile
from chaos_regularity.regularity import (
    CriterionWeight,
    Decision,
    RegularityVerdict,
    alpha_threshold,
    classify,
    criterion_sum,
    criterion_sum_numeric,
    criterion_log_weight,
    is_infinitely_differentiable,
    membership,
    sobolev_norm_sq,
)

BETAS = (-2.5, -1.0, -0.5, 0.5, 1.0, 1.5, 3.0)


def tail_profile(rho: float, p: float, head: tuple[float, ...] = (1.0,), C: float = 1.0) -> ChaosProfile:
    return ChaosProfile(head=head, tail=GeometricPolynomial(C=C, rho=rho, p=p))


def test_sobolev_norm_examples() -> None:
    assert sobolev_norm_sq(ChaosProfile(head=(1.0,)), 7.0).value == 1.0
    assert sobolev_norm_sq(ChaosProfile(head=(0.0, 1.0)), -1.0).value == pytest.approx(0.5)
    inverse_square = tail_profile(1.0, 2.0, head=(0.0,))
    assert sobolev_norm_sq(inverse_square, 0.5).finite
    assert sobolev_norm_sq(inverse_square, 1.5).divergent


@pytest.mark.parametrize(
    "n,beta,expected",
    [
        (1, 0.0, 1.0),
        (1, 1.0, 2.0),
        (1, 3.0, 0.0),
        (2, 3.0, 24.0),
        (0, -1.0, 1.0),
        (1, -1.0, 1.0 / 3.0),
        (0, -0.5, 2.0 / math.sqrt(math.pi)),
        (0, 0.5, 0.0),
        (1, 2.5, 0.0),
        (2, 2.5, 24.0 / math.gamma(2.5)),
    ],
)
def test_criterion_weight_values(n: int, beta: float, expected: float) -> None:
    assert CriterionWeight(n, beta).value == pytest.approx(expected, rel=1e-12)


def test_criterion_weight_increases_with_order() -> None:
    betas = np.linspace(-2.5, 2.5, 21)
    for n in range(2, 11):
        values = [CriterionWeight(n, float(b)).value for b in betas]
        assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("beta", [0.25, -0.25, 0.5, -0.5, 0.75, -0.75])
def test_criterion_weight_power_law(beta: float) -> None:
    w = math.exp(criterion_log_weight(beta)(np.array([1000.0]))[0])
    assert w / 2000.0**beta == pytest.approx(1.0, rel=1e-2)


def test_criterion_sum_examples() -> None:
    assert criterion_sum(ChaosProfile(head=(0.0, 1.0)), 1.0).value == pytest.approx(2.0)
    assert criterion_sum(ChaosProfile(head=(1.0,)), -1.0).value == pytest.approx(1.0)
    assert criterion_sum(tail_profile(1.0, 0.0), -1.0).divergent


def test_alpha_threshold_cases() -> None:
    assert alpha_threshold(ChaosProfile(head=(1.0, 2.0))) == math.inf
    assert alpha_threshold(tail_profile(1.0, 0.5)) == -0.5
    assert alpha_threshold(tail_profile(0.5, 0.5)) == math.inf
    assert alpha_threshold(tail_profile(1.5, 9.0)) == -math.inf
    # head values never move the threshold
    assert alpha_threshold(tail_profile(1.0, 2.0, head=(5.0, 0.0, 3.0))) == 1.0


def test_membership_examples() -> None:
    assert membership(tail_profile(1.0, 2.0), 0.5).decision is Decision.MEMBER
    on_threshold = membership(tail_profile(1.0, 2.0), 1.0)
    assert on_threshold.decision is Decision.NONMEMBER and on_threshold.boundary
    assert not membership(tail_profile(1.0, 2.0), 0.5).boundary
    assert membership(tail_profile(1.0, 2.0), 1.5).decision is Decision.NONMEMBER
    assert membership(tail_profile(0.5, 0.0), 100.0).decision is Decision.MEMBER


def test_high_orders_stay_finite() -> None:
    profile = tail_profile(0.5, 0.0)
    sob = sobolev_norm_sq(profile, 100.0)
    assert sob.finite and 1e140 < sob.value < math.inf
    assert criterion_sum(profile, 100.0).finite
    # terms near n = 216 exceed the float range; the sum is still finite
    huge = membership(profile, 300.0)
    assert huge.decision is Decision.MEMBER
    assert huge.sobolev.finite and huge.sobolev.value == math.inf


def test_donsker_delta_decisions() -> None:
    profile = donsker_chaos_profile(DonskerSpec(d=1))
    assert alpha_threshold(profile) == -0.5
    assert membership(profile, -1.0).decision is Decision.MEMBER
    boundary = membership(profile, -0.5)
    assert boundary.decision is Decision.NONMEMBER and boundary.boundary
    assert boundary.sobolev.divergent and boundary.criterion.divergent
    assert membership(profile, 0.5).decision is Decision.NONMEMBER


def test_membership_flags_disagreeing_routes(monkeypatch: pytest.MonkeyPatch) -> None:
    import chaos_regularity.regularity as regularity

    profile = tail_profile(1.0, 2.0)
    monkeypatch.setattr(
        regularity, "criterion_sum", lambda *args, **kwargs: sobolev_norm_sq(profile, 5.0)
    )
    with pytest.raises(ConsistencyError):
        regularity.membership(profile, 0.0)


def random_profiles(count_per_regime: int = 6, seed: int = 7) -> list[ChaosProfile]:
    rng = np.random.default_rng(seed)
    profiles = []
    for rho in (0.5, 1.0, 1.5):
        for p in (-1.0, 0.0, 0.5, 1.5, 2.0, 3.0):
            for _ in range(count_per_regime):
                head = tuple(rng.uniform(0.0, 2.0, size=int(rng.integers(1, 12))).tolist())
                profiles.append(tail_profile(rho, p, head=head, C=float(rng.uniform(0.1, 5.0))))
    return profiles


def test_routes_agree_on_generated_profiles() -> None:
    profiles = random_profiles()
    assert len(profiles) >= 100
    for profile in profiles:
        for beta in BETAS:
            sob = sobolev_norm_sq(profile, beta)
            crit = criterion_sum(profile, beta)
            assert sob.finite == crit.finite, (profile, beta)
            membership(profile, beta)


def test_scale_is_monotone() -> None:
    alphas = sorted(BETAS)
    for profile in random_profiles(count_per_regime=1):
        verdict = classify(profile, alphas)
        decisions = [verdict.member(a) for a in alphas]
        first_non = next((i for i, d in enumerate(decisions) if d is not Decision.MEMBER), None)
        if first_non is not None:
            assert Decision.MEMBER not in decisions[first_non:]


def test_verdict_json_round_trip() -> None:
    verdict = classify(tail_profile(1.0, 2.0), BETAS)
    text = verdict.to_json()
    assert RegularityVerdict.from_json(text).to_json() == text
    assert verdict.member(1.5) is Decision.NONMEMBER
    assert verdict.member(0.25) is Decision.MEMBER


def test_finite_support_verdict_encodes_infinity() -> None:
    verdict = classify(ChaosProfile(head=(1.0, 0.5), tail=FiniteSupport()), (3.0,))
    text = verdict.to_json()
    assert '"alpha_star": "+inf"' in text
    assert RegularityVerdict.from_json(text).alpha_star == math.inf


def test_divergent_sums_encode_infinity() -> None:
    text = classify(tail_profile(1.5, 0.0), (-1.0,)).to_json()
    assert '"sobolev_sum": "+inf"' in text
    assert '"alpha_star": "-inf"' in text


def test_verdict_rejects_malformed_document() -> None:
    with pytest.raises(InputError):
        RegularityVerdict.from_json('{"alpha_star": 1.0, "extra": 2}')


def test_infinitely_differentiable() -> None:
    assert is_infinitely_differentiable(ChaosProfile(head=(1.0,)))
    assert is_infinitely_differentiable(tail_profile(0.5, 0.0))
    assert not is_infinitely_differentiable(tail_profile(1.0, 5.0))


def test_numeric_first_derivative_approaches_two() -> None:
    res = criterion_sum_numeric(ChaosProfile(head=(0.0, 1.0)), 1.0, (0.5, 0.9, 0.99))
    assert res.values == pytest.approx((1.0, 1.8, 1.98), rel=1e-12)
    assert res.is_increasing()


def test_numeric_half_integral_of_constant() -> None:
    res = criterion_sum_numeric(ChaosProfile(head=(1.0,)), -0.5, (1.0,))
    assert res.final == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-8)
    assert res.final == pytest.approx(criterion_sum(ChaosProfile(head=(1.0,)), -0.5).value, rel=1e-8)


@pytest.mark.parametrize("beta", [-1.5, -1.0, 0.5, 1.5, 2.0, 2.5])
def test_numeric_matches_analytic_on_polynomials(beta: float) -> None:
    profile = ChaosProfile(head=(1.0, 0.5, 0.25, 0.125))
    res = criterion_sum_numeric(profile, beta, (1.0,))
    assert res.final == pytest.approx(criterion_sum(profile, beta).value, rel=1e-4)


def test_numeric_logarithmic_growth_for_planar_donsker() -> None:
    profile = donsker_chaos_profile(DonskerSpec(d=2), N=4000)
    grid = (0.9, 0.99, 0.999)
    res = criterion_sum_numeric(profile, -1.0, grid, tol=1e-8)
    c = 1.0 / (2.0 * math.pi) ** 2
    expected = [0.5 * c * (math.atanh(lam) + math.atan(lam)) for lam in grid]
    assert res.values == pytest.approx(expected, rel=1e-3)
    assert res.is_increasing()


def test_numeric_rejects_grid_outside_unit_interval() -> None:
    with pytest.raises(DomainError):
        criterion_sum_numeric(ChaosProfile(head=(1.0,)), 1.0, (0.5, 1.5))
    with pytest.raises(DomainError):
        criterion_sum_numeric(ChaosProfile(head=(1.0,)), 1.0, ())
