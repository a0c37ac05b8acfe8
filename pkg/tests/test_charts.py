"""
Testes para as cartas analíticas da fronteira.
"""
import numpy as np
import pytest

from app.domain.charts import flat_chart, gaussian_bump_chart, quadratic_chart, sphere_chart


def _fd_hessian(chart, xi: np.ndarray, h: float = 1e-5) -> np.ndarray:
    out = np.empty((2, 2))
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        out[:, j] = (chart.grad_eta(xi + step)[0] - chart.grad_eta(xi - step)[0]) / (2.0 * h)
    return out


class TestGraphCharts:
    """Testes para GraphChart e as fábricas de cartas."""

    def test_quadratic_hessian_form(self):
        """Σuᵢuⱼ∂ᵢ∂ⱼη = uᵀAu em qualquer ponto da carta."""
        # Arrange
        chart = quadratic_chart(1.0, 0.5, -2.0)
        u = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        xi = np.array([[0.0, 0.0], [0.1, -0.1], [0.2, 0.05]])

        # Act
        values = chart.hessian_form(xi, u)

        # Assert
        assert np.allclose(values, [1.0, -2.0, 0.0])
        assert chart.c_eta == pytest.approx(3.5)

    def test_sphere_cap_curvature(self):
        """Calota de raio R: ∇²η(0) = I/R e normal exterior −e₃."""
        chart = sphere_chart(radius=2.0)

        assert chart.hessian_form(np.zeros(2), np.array([1.0, 0.0]))[0] == pytest.approx(0.5)
        assert np.allclose(chart.normal(np.zeros(2))[0], [0.0, 0.0, -1.0])

    def test_bump_derivatives_are_consistent(self):
        """∇²η analítico contra diferenças centradas de ∇η."""
        chart = gaussian_bump_chart(h=0.3, w=0.4)
        xi = np.array([[0.15, -0.2]])

        assert np.allclose(chart.hessian_eta(xi)[0], _fd_hessian(chart, xi), atol=1e-6)

    def test_flat_chart_has_no_curvature(self):
        """η ≡ 0: C_η = 0 e hessian_form nula."""
        chart = flat_chart()

        assert chart.c_eta == 0.0
        assert chart.hessian_form(np.array([0.1, 0.2]), np.array([3.0, -1.0]))[0] == 0.0

    def test_in_patch(self):
        """Retângulo aberto (−δ, δ)²."""
        chart = quadratic_chart(1.0, 0.0, 1.0, half=0.25)

        assert chart.in_patch(np.array([[0.2, -0.2], [0.25, 0.0]])).tolist() == [True, False]


class TestImplicitCharts:
    """Testes para as cartas obtidas por Newton."""

    def test_ball_chart_is_aligned_at_origin(self, ball_domain):
        """No centro da carta ∇η = 0 e a forma bruta coincide com a segunda forma da esfera."""
        chart = ball_domain.charts[0]

        assert np.allclose(chart.grad_eta(np.zeros((1, 2)))[0], 0.0, atol=1e-10)
        assert chart.hessian_form(np.zeros(2), np.array([1.0, 0.0]))[0] == pytest.approx(1.0, rel=1e-5)

    def test_ball_chart_hessian_matches_fd(self, ball_domain):
        """Fora do centro a carta não está realinhada; ∇²η ainda bate com diferenças."""
        chart = ball_domain.charts[0]
        xi = np.array([[0.5 * chart.half, -0.3 * chart.half]])

        assert np.allclose(chart.hessian_eta(xi)[0], _fd_hessian(chart, xi), atol=1e-4)
