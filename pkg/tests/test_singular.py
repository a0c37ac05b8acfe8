"""
Testes para o conjunto singular: parametrização, normal e amostragem.
"""
import numpy as np
import pytest

from app.application.geometry import chart_domain, second_form_batch
from app.application.singular import (
    MIN_SPEED,
    SingularIndex,
    audit_residuals,
    codim_audit,
    codim_certificate,
    dist_to_singular,
    generalized_cross,
    sample_singular_set,
    singular_derivatives,
    singular_normal,
    singular_param,
)
from app.core.exceptions import EmptySampleSet, OutOfPatch, RayLeavesChart
from app.domain.charts import quadratic_chart
from app.domain.models import PhasePoint, SingularPatchParams, SingularSampleSet


@pytest.fixture(scope="module")
def ball_samples(ball_domain):
    """Amostras do conjunto singular da bola."""
    return sample_singular_set(ball_domain, 200, seed=1)


def _empty_set() -> SingularSampleSet:
    return SingularSampleSet(
        x=np.zeros((0, 3)),
        v=np.zeros((0, 3)),
        chart_id=np.zeros(0, dtype=int),
        xi=np.zeros((0, 2)),
        theta=np.zeros(0),
        r_v=np.zeros(0),
        s=np.zeros(0),
    )


class TestSingularParam:
    """Testes para singular_param e as derivadas."""

    def test_launch_is_tangent(self, ball_domain):
        """Com s = 0 o ponto está na fronteira e v é tangente."""
        # Arrange
        params = SingularPatchParams(chart_id=0, x1=0.0, x2=0.0, theta=0.7, r_v=2.0, s=0.0)

        # Act
        p = singular_param(ball_domain, params)

        # Assert
        assert abs(ball_domain.shape.phi(p.x[None, :])[0]) < 1e-10
        assert abs(np.dot(p.x, p.v)) < 1e-9
        assert np.linalg.norm(p.v) == pytest.approx(2.0)

    def test_convex_launch_rejects_positive_s(self, ball_domain):
        """Na bola (convexa) só s = 0 é admissível."""
        params = SingularPatchParams(chart_id=0, x1=0.0, x2=0.0, theta=0.0, r_v=1.0, s=0.1)

        with pytest.raises(RayLeavesChart):
            singular_param(ball_domain, params)

    def test_out_of_patch(self, slab_domain):
        """(x₁, x₂) fora de (−δ, δ)² é rejeitado."""
        params = SingularPatchParams(chart_id=0, x1=2.0 * slab_domain.delta, x2=0.0, theta=0.0, r_v=1.0, s=0.0)

        with pytest.raises(OutOfPatch):
            singular_param(slab_domain, params)

    def test_flat_launch_moves_along_plane(self, slab_domain):
        """Na placa, X = b + s·V permanece na face."""
        params = SingularPatchParams(chart_id=0, x1=0.1, x2=-0.2, theta=0.4, r_v=1.5, s=0.3)

        p = singular_param(slab_domain, params)

        assert abs(abs(p.x[2]) - slab_domain.shape.half_height) < 1e-10
        assert abs(p.v[2]) < 1e-12

    def test_derivatives_match_finite_differences(self, bump_domain):
        """Matriz 5×6 analítica contra diferenças centrais da parametrização."""
        base = SingularPatchParams(chart_id=3, x1=0.01, x2=-0.02, theta=0.9, r_v=1.2, s=0.0)
        h = 1e-6

        analytic = singular_derivatives(bump_domain, base)

        names = ("x1", "x2", "theta", "r_v")
        for row, name in enumerate(names):
            plus = singular_param(bump_domain, _shifted(base, name, h)).as_vector()
            minus = singular_param(bump_domain, _shifted(base, name, -h)).as_vector()
            assert np.allclose(analytic[row], (plus - minus) / (2 * h), atol=1e-5)


def _shifted(p: SingularPatchParams, name: str, h: float) -> SingularPatchParams:
    values = dict(p.__dict__)
    values[name] += h
    return SingularPatchParams(**values)


class TestSingularNormal:
    """Testes para o produto vetorial generalizado e a normal 𝒩."""

    def test_generalized_cross_is_orthogonal(self):
        """𝒩 é ortogonal a cada linha da matriz."""
        m = np.random.default_rng(0).standard_normal((5, 6))

        normal = generalized_cross(m)

        assert np.allclose(m @ normal, 0.0, atol=1e-10)
        assert np.linalg.norm(normal) > 0

    def test_normal_vanishes_on_flat_chart(self, slab_domain):
        """Cartas planas não têm normal (conjunto degenerado)."""
        params = SingularPatchParams(chart_id=0, x1=0.0, x2=0.0, theta=0.3, r_v=1.0, s=0.2)

        normal = singular_normal(slab_domain, params)

        assert np.allclose(normal, 0.0, atol=1e-12)

    def test_normal_closed_form_on_quadratic_chart(self):
        """Com ∇η(0) = 0 e θ = 0, 𝒩 = (0, 0, −r_v³∂₁₁η, 0, 0, s·r_v³∂₁₁η)."""
        # Arrange
        domain = chart_domain(quadratic_chart(-0.5, 0.2, 0.3))
        params = SingularPatchParams(chart_id=0, x1=0.0, x2=0.0, theta=0.0, r_v=1.5, s=0.4)
        cube = 1.5 ** 3
        expected = np.array([0.0, 0.0, 0.5 * cube, 0.0, 0.0, -0.4 * 0.5 * cube])

        # Act
        normal = singular_normal(domain, params)

        # Assert
        assert np.allclose(normal, expected, rtol=1e-10, atol=1e-12)

    def test_normal_closed_form_on_bump_chart(self, bump_domain):
        """Numa carta implícita do bump, 𝒩 em coordenadas da carta segue a forma fechada."""
        # Arrange
        origin = np.zeros((1, 2))
        chart = next(
            c for c in bump_domain.charts
            if np.linalg.norm(c.grad_eta(origin)) < 1e-9 and abs(c.hessian_eta(origin)[0, 0, 0]) > 1e-2
        )
        eta11 = chart.hessian_eta(origin)[0, 0, 0]
        r_v, s = 1.2, 0.3
        params = SingularPatchParams(chart_id=chart.id, x1=0.0, x2=0.0, theta=0.0, r_v=r_v, s=s)
        to_local = np.zeros((6, 6))
        to_local[:3, :3] = chart.frame.T
        to_local[3:, 3:] = chart.frame.T
        scale = r_v ** 3 * abs(eta11)
        expected = np.array([0.0, 0.0, -(r_v ** 3) * eta11, 0.0, 0.0, s * r_v ** 3 * eta11])

        # Act
        normal = singular_normal(bump_domain, params)
        rows = singular_derivatives(bump_domain, params)

        # Assert
        assert np.allclose(to_local @ normal, expected, rtol=1e-6, atol=1e-7 * scale)
        assert np.allclose(rows @ normal, 0.0, atol=1e-9 * scale)

    def test_codim_certificate_on_nonconvex_launch(self, bump_domain):
        """Em lançamento com ∂₁₁η ≠ 0 o certificado não degenera."""
        # Arrange
        origin = np.zeros((1, 2))
        chart = next(
            c for c in bump_domain.charts
            if np.linalg.norm(c.grad_eta(origin)) < 1e-9 and abs(c.hessian_eta(origin)[0, 0, 0]) > 1e-2
        )
        params = SingularPatchParams(chart_id=chart.id, x1=0.0, x2=0.0, theta=0.0, r_v=1.0, s=0.0)

        # Act
        cert = codim_certificate(bump_domain, params)

        # Assert
        assert cert["normal_norm"] == pytest.approx(abs(chart.hessian_eta(origin)[0, 0, 0]), rel=1e-4)
        assert 0.0 < cert["min_singular_value"] <= 1.0 + 1e-9


class TestSampling:
    """Testes para sample_singular_set e distâncias."""

    def test_ball_samples_are_convex_launches(self, ball_domain, ball_samples):
        """Na bola todo lançamento é convexo: s = 0 e resíduo pequeno."""
        assert len(ball_samples) > 0
        assert np.all(ball_samples.s == 0)
        assert np.all(ball_samples.residual < 1e-6)
        assert np.abs(ball_domain.shape.phi(ball_samples.x)).max() < 1e-8

    def test_audit_residuals(self, ball_samples):
        """Todas as amostras mantidas passam no resíduo."""
        result = audit_residuals(ball_samples)

        assert result["pass_fraction"] == pytest.approx(1.0)
        assert result["n"] == len(ball_samples) + ball_samples.failed

    def test_sampling_is_deterministic(self, ball_domain, ball_samples):
        """Mesma semente dá as mesmas amostras, com qualquer número de workers."""
        again = sample_singular_set(ball_domain, 200, seed=1, threads=2)

        assert np.array_equal(again.x, ball_samples.x)
        assert np.array_equal(again.v, ball_samples.v)

    def test_distance_of_sample_is_zero(self, ball_domain, ball_samples):
        """A distância de uma amostra ao conjunto é zero."""
        p = PhasePoint(ball_samples.x[0], ball_samples.v[0])

        assert dist_to_singular(ball_domain, p, ball_samples) == pytest.approx(0.0, abs=1e-12)

    def test_empty_set_raises(self, ball_domain):
        """Sem amostras não há distância."""
        with pytest.raises(EmptySampleSet):
            dist_to_singular(ball_domain, PhasePoint.of([0, 0, 0], [1, 0, 0]), _empty_set())

        with pytest.raises(EmptySampleSet):
            SingularIndex(_empty_set())

    def test_invalid_count(self, ball_domain):
        """n < 1 é rejeitado."""
        with pytest.raises(ValueError):
            sample_singular_set(ball_domain, 0, seed=1)


@pytest.fixture(scope="module")
def bump_samples(bump_domain):
    """Amostras do conjunto singular do bump, que tem lançamentos não convexos."""
    return sample_singular_set(bump_domain, 200, seed=4)


@pytest.mark.slow
class TestNonconvexSampling:
    """Amostragem de 𝔖_B num domínio com pontos estritamente não convexos."""

    def test_some_launches_travel(self, bump_samples):
        """Parte das amostras tem s > 0 e fica dentro de Ω."""
        # Arrange
        moved = bump_samples.s > 0

        # Assert
        assert moved.any()
        assert np.all(bump_samples.residual < 1e-6)

    def test_travelled_samples_start_at_concave_launches(self, bump_domain, bump_samples):
        """Amostras com s > 0 partem de lançamento com segunda forma negativa ou plana."""
        # Arrange
        moved = bump_samples.s > 0
        base = bump_samples.x[moved] - bump_samples.s[moved, None] * bump_samples.v[moved]
        w = bump_samples.v[moved] / bump_samples.r_v[moved, None]

        # Act
        kappa = second_form_batch(bump_domain, base, w)

        # Assert
        assert np.all(kappa <= 1e-9)
        assert np.abs(bump_domain.shape.phi(base)).max() < 1e-8

    def test_speed_floor(self, bump_samples):
        """r_v nunca fica abaixo do piso MIN_SPEED."""
        assert bump_samples.r_v.min() >= MIN_SPEED

    def test_codim_audit_finds_nonconvex_launches(self, bump_domain, bump_samples):
        """O certificado de codimensão é avaliado em lançamentos não convexos."""
        # Act
        result = codim_audit(bump_domain, bump_samples, n=20)

        # Assert
        assert result["n"] > 0
        assert result["min_normal_norm"] > 0.0
        assert result["min_singular_value"] > 0.0

    def test_residual_audit_with_failures(self, bump_domain):
        """Mantendo as reprovadas, quase todas as amostras passam no resíduo."""
        # Arrange
        samples = sample_singular_set(bump_domain, 200, seed=4, keep_failures=True)

        # Act
        result = audit_residuals(samples)

        # Assert
        assert result["n"] == len(samples)
        assert result["pass_fraction"] >= 0.95
