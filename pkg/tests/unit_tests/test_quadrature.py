import math

import numpy as np
import pytest

from chaos_regularity.errors import DomainError, InputError
from chaos_regularity.quadrature import (
    ExclusionTube,
    MeshSpec,
    Singularity,
    gauss_legendre,
    graded_rule,
    integrate_1d,
    integrate_2d_gaussian,
    integrate_simplex4,
    integrate_triangle,
)


def test_power_singularity() -> None:
    res = integrate_1d(lambda x: 1.0, 0.0, 1.0, Singularity.power(-0.5))
    assert res.converged
    assert res.value == pytest.approx(2.0, rel=1e-12)
    right = integrate_1d(lambda x: 1.0, 0.0, 1.0, Singularity.power(-0.5, "right"))
    assert right.value == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("exponent", [-0.9, -0.7, -0.5, -0.3, -0.1])
@pytest.mark.parametrize("endpoint", ["left", "right"])
def test_power_singularity_sweep(exponent: float, endpoint: str) -> None:
    # int_0^1 (1 + x) |x - e|**a dx with e the singular endpoint
    res = integrate_1d(lambda x: 1.0 + x, 0.0, 1.0, Singularity.power(exponent, endpoint))
    near = 1.0 / (exponent + 1.0)
    far = 1.0 / (exponent + 2.0)
    expected = near + far if endpoint == "left" else 2.0 * near - far
    assert res.converged
    assert res.value == pytest.approx(expected, rel=1e-10)


def test_log_singularity() -> None:
    res = integrate_1d(lambda x: 1.0, 0.0, 1.0, Singularity.log("left", -0.5))
    assert res.value == pytest.approx(-4.0, rel=1e-12)
    plain = integrate_1d(lambda x: 1.0, 0.0, 1.0, Singularity.log("right"))
    assert plain.value == pytest.approx(-1.0, rel=1e-12)


def test_integrate_1d_rejects() -> None:
    with pytest.raises(DomainError):
        integrate_1d(lambda x: 1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_1d(lambda x: 1.0, 0.0, 1.0, Singularity.power(-1.0))


@pytest.mark.parametrize("order", [1, 5, 20])
def test_gauss_legendre_on_unit_interval(order: int) -> None:
    nodes, weights = gauss_legendre(order)
    assert weights.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.all((nodes > 0.0) & (nodes < 1.0))


def test_graded_rule_clusters_at_ends() -> None:
    nodes, weights = graded_rule(32, 3.0)
    assert weights.sum() == pytest.approx(1.0, rel=1e-6)
    plain, _ = gauss_legendre(32)
    assert nodes[0] < plain[0]
    identity, _ = graded_rule(8, 1.0)
    np.testing.assert_allclose(identity, gauss_legendre(8)[0])


def test_plane_gaussian() -> None:
    res = integrate_2d_gaussian(lambda x, y: np.exp(-(x * x + y * y)), decay=1.0)
    assert res.converged
    assert res.value == pytest.approx(math.pi, rel=1e-10)
    with pytest.raises(DomainError):
        integrate_2d_gaussian(lambda x, y: x, decay=0.0)


def test_mesh_spec() -> None:
    mesh = MeshSpec.parse("16:16:3")
    assert mesh == MeshSpec(16, 16, 3.0)
    assert mesh.refined() == MeshSpec(24, 24, 3.0)
    assert MeshSpec.parse("8:4") == MeshSpec(8, 4, 3.0)
    assert mesh.describe() == "16:16:3"
    for bad in ("a:b", "1:2:3:4", "16"):
        with pytest.raises(InputError):
            MeshSpec.parse(bad)
    with pytest.raises(InputError):
        MeshSpec(0, 4)
    with pytest.raises(InputError):
        MeshSpec(4, 4, 0.5)


def test_exclusion_tube_needs_geometric_radii() -> None:
    assert ExclusionTube().radii == (1e-2, 5e-3, 2.5e-3)
    with pytest.raises(InputError):
        ExclusionTube((1e-2, 4e-3, 2e-3))
    with pytest.raises(InputError):
        ExclusionTube((1e-3, 5e-3, 2.5e-2))


def test_triangle_area() -> None:
    assert integrate_triangle(lambda t, s: np.ones_like(t), 2.0, 8) == pytest.approx(2.0, rel=1e-12)
    # int_0^1 int_0^t s ds dt = 1/6
    assert integrate_triangle(lambda t, s: s, 1.0, 8) == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_simplex_polynomials_are_exact() -> None:
    mesh = MeshSpec(8, 8, 1.0)
    ones = integrate_simplex4(lambda t1, s1, t2, s2: np.ones_like(t2), 1.0, mesh)
    assert ones.value == pytest.approx(0.25, rel=1e-10)
    assert ones.converged
    assert ones.metadata["mesh"] == "8:8:1"
    product = integrate_simplex4(lambda t1, s1, t2, s2: t1 * s2, 1.0, mesh)
    assert product.value == pytest.approx(1.0 / 18.0, rel=1e-10)
    scaled = integrate_simplex4(lambda t1, s1, t2, s2: np.ones_like(t2), 2.0, mesh)
    assert scaled.value == pytest.approx(4.0, rel=1e-10)


def test_simplex_qmc_cross_check() -> None:
    res = integrate_simplex4(
        lambda t1, s1, t2, s2: t1 * s2, 1.0, MeshSpec(), method="qmc", seed=3
    )
    assert res.value == pytest.approx(1.0 / 18.0, abs=1e-2)
    assert res.metadata["method"] == "qmc"
    assert res.metadata["seed"] == 3


def test_simplex_divergent_integrand() -> None:
    res = integrate_simplex4(
        lambda t1, s1, t2, s2: np.full_like(t2, np.inf), 1.0, MeshSpec(4, 4, 1.0)
    )
    assert res.divergent
    assert res.value == math.inf


def test_simplex_separable_integrand_is_a_product() -> None:
    def g(t, s):
        return np.exp(-t) * np.cos(s)

    def h(t, s):
        return 1.0 + t * s

    res = integrate_simplex4(lambda t1, s1, t2, s2: g(t1, s1) * h(t2, s2), 1.0, MeshSpec(10, 10, 1.0))
    expected = integrate_triangle(g, 1.0, 16) * integrate_triangle(h, 1.0, 16)
    assert res.value == pytest.approx(expected, rel=1e-8)


class WidthRecorder:
    """Unit integrand that checks the offsets handed to its relative form."""

    def __init__(self) -> None:
        self.worst = 0.0
        self.calls = 0

    def __call__(self, t1, s1, t2, s2):
        return np.ones_like(t2)

    def relative(self, t1, s1, dt, ds, width2):
        self.calls += 1
        self.worst = max(self.worst, float(np.max(np.abs(width2 - ((t1 - s1) + dt - ds)))))
        assert np.all(width2 >= 0.0)
        return np.ones_like(dt)


def test_simplex_uses_relative_form() -> None:
    recorder = WidthRecorder()
    res = integrate_simplex4(recorder, 1.0, MeshSpec(12, 12, 3.0))
    assert recorder.calls > 0
    assert recorder.worst < 1e-14
    assert res.value == pytest.approx(0.25, rel=1e-5)


def test_simplex_relative_width_of_second_pair() -> None:
    class Width:
        def __call__(self, t1, s1, t2, s2):
            return t2 - s2

        def relative(self, t1, s1, dt, ds, width2):
            return width2

    # int of (t - s) over one triangle is 1/6, the other contributes its area
    res = integrate_simplex4(Width(), 1.0, MeshSpec(8, 8, 1.0))
    assert res.value == pytest.approx(1.0 / 12.0, rel=1e-10)


def test_simplex_drops_isolated_non_finite_nodes() -> None:
    def f(t1, s1, t2, s2):
        near = np.abs(t2 - t1) + np.abs(s2 - s1) < 1e-4
        return np.where(near, np.nan, 1.0)

    res = integrate_simplex4(f, 1.0, MeshSpec(12, 12, 3.0))
    assert not res.divergent
    assert 0.0 < res.metadata["dropped"] < 1e-6
    assert res.value == pytest.approx(0.25, rel=1e-5)


def test_simplex_growth_under_refinement_is_divergence() -> None:
    def f(t1, s1, t2, s2):
        return (np.abs(t2 - t1) + np.abs(s2 - s1)) ** -3.0

    res = integrate_simplex4(f, 1.0, MeshSpec(8, 8, 3.0))
    assert res.divergent
    assert res.metadata["fine"] > res.metadata["coarse"]


def test_simplex_exclusion_tube_on_smooth_integrand() -> None:
    res = integrate_simplex4(
        lambda t1, s1, t2, s2: np.ones_like(t2), 1.0, MeshSpec(8, 8, 1.0), ExclusionTube()
    )
    assert res.value == pytest.approx(0.25, rel=1e-3)


def test_simplex_rejects_horizon() -> None:
    with pytest.raises(DomainError):
        integrate_simplex4(lambda t1, s1, t2, s2: t1, 0.0, MeshSpec())
