"""
Testes para o traçado de tempos e pontos de saída.
"""
import numpy as np
import pytest

from app.application.geometry import chart_domain
from app.application.raytrace import (
    GrazingClass,
    backward_exit,
    check_involution,
    dense_exit_oracle,
    exit_derivatives,
    exit_derivatives_fd,
    forward_exit,
    grazing_classify,
    sample_rays,
    trace_exits,
)
from app.core.exceptions import GrazingRay, RaytraceError
from app.core.rng import stream
from app.domain.charts import flat_chart
from app.domain.models import PhasePoint


class TestBackwardExit:
    """Testes para backward_exit e forward_exit."""

    def test_ball_center(self, ball_domain):
        """Do centro da bola unitária com v = e₁: t_b = 1 e x_b = −e₁."""
        # Arrange
        p = PhasePoint.of([0, 0, 0], [1, 0, 0])

        # Act
        rec = backward_exit(ball_domain, p)

        # Assert
        assert rec.t_exit == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(rec.x_exit, [-1.0, 0.0, 0.0], atol=1e-12)
        assert rec.speed_normal == pytest.approx(-1.0, abs=1e-12)
        assert not rec.grazing

    def test_forward_mirrors_backward(self, ball_domain):
        """t_f(x, v) = t_b(x, −v)."""
        p = PhasePoint.of([0.1, -0.2, 0.3], [0.4, 0.5, -0.6])

        fwd = forward_exit(ball_domain, p)
        back = backward_exit(ball_domain, PhasePoint(p.x, -p.v))

        assert fwd.t_exit == pytest.approx(back.t_exit, rel=1e-12)
        assert np.allclose(fwd.x_exit, back.x_exit, atol=1e-12)

    def test_speed_scaling(self, ball_domain):
        """t_b(x, λv) = t_b(x, v)/λ e x_b não muda."""
        x = np.array([0.2, 0.1, -0.3])
        v = np.array([0.5, -1.0, 0.3])

        base = backward_exit(ball_domain, PhasePoint(x, v))
        scaled = backward_exit(ball_domain, PhasePoint(x, 4.0 * v))

        assert scaled.t_exit == pytest.approx(base.t_exit / 4.0, rel=1e-12)
        assert np.allclose(scaled.x_exit, base.x_exit, atol=1e-12)

    def test_zero_velocity_never_exits(self, ball_domain):
        """v = 0 dá t_b = +inf sem ponto de saída."""
        rec = backward_exit(ball_domain, PhasePoint.of([0, 0, 0], [0, 0, 0]))

        assert rec.t_exit == np.inf
        assert rec.x_exit is None
        assert not rec.hits

    def test_slab_vertical_and_horizontal(self, slab_domain):
        """Na placa, v₃ = 0 nunca sai e v = e₃ sai pela face inferior."""
        x = np.zeros((2, 3))
        v = np.array([[0.0, 0.0, 1.0], [1.0, 0.5, 0.0]])

        exits = trace_exits(slab_domain, x, v)

        assert exits.t[0] == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(exits.x_exit[0], [0.0, 0.0, -0.5], atol=1e-12)
        assert exits.t[1] == np.inf

    def test_exit_on_boundary(self, bump_domain):
        """Pontos de saída ficam sobre ∂Ω."""
        x, v = sample_rays(bump_domain, 50, stream(5, "test_exit"))

        exits = trace_exits(bump_domain, x, v)

        hit = np.isfinite(exits.t)
        assert hit.any()
        assert np.abs(bump_domain.shape.phi(exits.x_exit[hit])).max() < 1e-8

    def test_composite_domain_rejected(self):
        """Domínio só de cartas não tem forma para traçar."""
        domain = chart_domain(flat_chart())

        with pytest.raises(RaytraceError):
            trace_exits(domain, np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]))


class TestExitDerivatives:
    """Testes para as derivadas de (t_b, x_b)."""

    def test_ball_center_gradient(self, ball_domain):
        """∇ₓt_b = n(x_b)/(n(x_b)·v) = e₁ no centro."""
        grad_x_tb, grad_v_tb, _, _ = exit_derivatives(ball_domain, PhasePoint.of([0, 0, 0], [1, 0, 0]))

        assert np.allclose(grad_x_tb, [1.0, 0.0, 0.0], atol=1e-12)
        assert np.allclose(grad_v_tb, [-1.0, 0.0, 0.0], atol=1e-12)

    def test_matches_finite_differences(self, ball_domain):
        """Fórmulas analíticas concordam com diferenças centrais."""
        p = PhasePoint.of([0.2, 0.1, -0.3], [0.5, -1.0, 0.3])

        analytic = exit_derivatives(ball_domain, p)
        numeric = exit_derivatives_fd(ball_domain, p)

        for a, b in zip(analytic, numeric):
            assert np.allclose(a, b, atol=1e-6)

    def test_grazing_raises(self, ball_domain):
        """Raio tangente à esfera não tem derivadas."""
        p = PhasePoint.of([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])

        with pytest.raises(GrazingRay):
            exit_derivatives(ball_domain, p)


class TestAudits:
    """Testes para classificação, oráculo denso e involução."""

    def test_grazing_classify(self, ball_domain, slab_domain):
        """Raio tangente é rasante; raio radial não; raio que não sai conta como rasante."""
        tangent = PhasePoint.of([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
        radial = PhasePoint.of([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        horizontal = PhasePoint.of([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])

        assert grazing_classify(ball_domain, tangent) == GrazingClass.GRAZING
        assert grazing_classify(ball_domain, radial) == GrazingClass.NONDEGENERATE
        assert grazing_classify(slab_domain, horizontal) == GrazingClass.GRAZING

    def test_dense_oracle_agrees(self, ball_domain):
        """Oráculo de marcha densa concorda com o traçado."""
        x, v = sample_rays(ball_domain, 5, stream(11, "test_oracle"))

        oracle = dense_exit_oracle(ball_domain, x, v)
        traced = trace_exits(ball_domain, x, v).t

        speed = np.linalg.norm(v, axis=1)
        assert np.allclose(oracle * speed, traced * speed, atol=1e-8)

    def test_involution(self, ball_domain):
        """x_f(x_b(x, v), v) = x_f(x, v) e os tempos somam."""
        x, v = sample_rays(ball_domain, 200, stream(12, "test_involution"))

        result = check_involution(ball_domain, x, v)

        assert result["n"] > 150
        assert result["max_position_error"] < 1e-8
        assert result["max_time_error"] < 1e-8
