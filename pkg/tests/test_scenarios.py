"""
Testes para a galeria de cenários de transporte.
"""
import numpy as np
import pytest

from app.application.scenarios import (
    bump_datum,
    get_scenario,
    scenario_names,
    streaming_inflow,
    streaming_inflow_dt,
    streaming_inflow_grad_v,
)
from app.application.transport import TransportProblem


class TestScenarioRegistry:
    """Testes para o registro de cenários."""

    def test_names_are_sorted(self):
        """Cinco cenários em ordem alfabética."""
        assert scenario_names() == ["free-streaming", "green", "jump-bump", "maxwellian-check", "pure-transport"]

    def test_unknown_scenario(self):
        """Nome desconhecido lista os disponíveis."""
        with pytest.raises(ValueError, match="maxwellian-check"):
            get_scenario("vlasov")

    @pytest.mark.parametrize("name", ["free-streaming", "green", "jump-bump", "maxwellian-check", "pure-transport"])
    def test_build(self, ball_domain, name):
        """Cada cenário produz um problema com o seu nome."""
        # Arrange
        scenario = get_scenario(name)

        # Act
        problem = scenario.build(ball_domain)

        # Assert
        assert isinstance(problem, TransportProblem)
        assert problem.name == name
        assert problem.domain is ball_domain
        assert problem.boundary == ("diffuse" if name == "maxwellian-check" else "inflow")

    def test_green_constants(self, ball_domain):
        """ν = 1/2 em forma fechada e H = e^{−|v|²/2}/10."""
        problem = get_scenario("green").build(ball_domain)
        v = np.array([[1.0, 0.0, 0.0]])

        assert problem.nu_constant == 0.5
        assert problem.source(np.zeros(1), np.zeros((1, 3)), v)[0] == pytest.approx(0.1 * np.exp(-0.5))


class TestClosedFormData:
    """Testes para os dados em forma fechada."""

    def test_bump_datum_peak(self):
        """f₀(0, 0) = 1."""
        assert bump_datum(np.zeros((1, 3)), np.zeros((1, 3)))[0] == 1.0

    def test_streaming_inflow_is_transported(self):
        """∂_t g + v·∇ₓg = 0: a derivativa em t bate com diferenças."""
        x = np.array([[0.3, -0.2, 0.9]])
        v = np.array([[0.5, 0.4, -1.0]])
        h = 1e-6

        numeric = (streaming_inflow(np.array([0.4 + h]), x, v) - streaming_inflow(np.array([0.4 - h]), x, v)) / (2 * h)

        assert streaming_inflow_dt(np.array([0.4]), x, v)[0] == pytest.approx(numeric[0], abs=1e-8)

    def test_streaming_inflow_grad_v(self):
        """∇ᵥg contra diferenças centrais."""
        x = np.array([[0.3, -0.2, 0.9]])
        v = np.array([[0.5, 0.4, -1.0]])
        t = np.array([0.4])
        h = 1e-6

        analytic = streaming_inflow_grad_v(t, x, v)[0]
        for k in range(3):
            e = np.zeros((1, 3))
            e[0, k] = h
            numeric = (streaming_inflow(t, x, v + e) - streaming_inflow(t, x, v - e))[0] / (2 * h)
            assert analytic[k] == pytest.approx(numeric, abs=1e-8)
