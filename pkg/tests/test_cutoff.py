"""
Testes para o molificador e o corte χ_ε.
"""
import math

import numpy as np
import pytest

from app.application.cover import build_cover
from app.application.cutoff import (
    DIM,
    _profile_slope_sup,
    _shortcut,
    build_cutoff,
    cutoff_eval,
    cutoff_eval_batch,
    cutoff_grad,
    lipschitz_audit,
    mass_check,
    mollifier_eval,
    mollifier_norm_const,
    w11_report,
)
from app.core.rng import stream
from app.domain.models import CoverParams, PhasePoint


@pytest.fixture(scope="module")
def slab_field(slab_domain):
    """χ_ε na placa com ε = 3/16 (δ/4) e poucas amostras de núcleo."""
    params = CoverParams(eps=0.1875, eps1=0.1875, delta=slab_domain.delta, c_eta=slab_domain.c_eta)
    return build_cutoff(build_cover(slab_domain, params), mc_n=64)


class TestMollifier:
    """Testes para φ_ε."""

    def test_unit_mass(self):
        """∬φ_ε = 1 dentro do erro de Monte Carlo."""
        # Act
        mass, err = mass_check(0.1, 200_000, seed=0)

        # Assert
        assert abs(mass - 1.0) < 5.0 * err + 1e-3

    def test_support(self):
        """φ_ε se anula fora de B(0; ε/C̃) com C̃ = 1000."""
        rho = 0.1 / 1000.0
        x = np.array([[0.0, 0.0, 0.0], [1.01 * rho, 0.0, 0.0], [0.0, 0.0, 0.0]])
        v = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.5 * rho, 0.0]])

        values = mollifier_eval(0.1, x, v)

        assert values[0] == pytest.approx(mollifier_norm_const() * math.exp(-1.0) / rho ** DIM)
        assert values[1] == 0.0
        assert 0.0 < values[2] < values[0]

    def test_explicit_c_tilde(self):
        """C̃ explícito muda o raio do suporte."""
        values = mollifier_eval(0.1, np.array([[0.005, 0.0, 0.0]]), np.zeros((1, 3)), c_tilde=10.0)

        assert values[0] > 0.0


class TestCutoffField:
    """Testes para CutoffField e a avaliação de χ_ε."""

    def test_radius_and_scale(self, slab_field):
        """ρ = ε/C̃ e escala C_*ε."""
        assert slab_field.c_tilde == pytest.approx(1000.0)
        assert slab_field.rho == pytest.approx(1.875e-4)
        assert slab_field.scale == pytest.approx(1.875)

    def test_kernel_samples_in_support(self, slab_field):
        """Deslocamentos do núcleo ficam em B(0; ρ)."""
        z = slab_field.sample_kernel(1000, stream(0, "test_kernel"))

        assert z.shape == (1000, DIM)
        assert np.linalg.norm(z, axis=1).max() <= slab_field.rho * (1.0 + 1e-12)

    def test_lipschitz_bound(self, slab_field):
        """L = (6/ε)·C̃·sup|φ′|."""
        assert slab_field.lipschitz_bound() == pytest.approx(6.0 / 0.1875 * 1000.0 * _profile_slope_sup())

    def test_slow_component_vanishes(self, slab_field):
        """Perto de v = 0 a bola do núcleo cabe no recobrimento: χ_ε = 0 sem amostragem."""
        points = np.array([[0.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]])

        assert _shortcut(slab_field, points).all()
        value, err = cutoff_eval(slab_field, PhasePoint(points[0, :3], points[0, 3:]), seed=1)
        assert value == 0.0
        assert err == 0.0

    def test_fast_normal_velocity_is_one(self, slab_field):
        """Longe do recobrimento χ_ε = 1 e o gradiente se anula."""
        p = PhasePoint.of([0.0, 0.0, 0.0], [0.0, 0.0, 3.0])

        value, _ = cutoff_eval(slab_field, p, seed=1)
        grad, _ = cutoff_grad(slab_field, p, seed=1)

        assert value == pytest.approx(1.0)
        assert np.allclose(grad, 0.0)

    def test_batch_is_deterministic(self, slab_field):
        """Mesma semente, mesmos valores."""
        points = np.array([[0.0, 0.0, 0.45, 3.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0, 0.0, 3.0]])

        a, _ = cutoff_eval_batch(slab_field, points, seed=5, m=32)
        b, _ = cutoff_eval_batch(slab_field, points, seed=5, m=32)

        assert np.array_equal(a, b)
        assert np.all((a >= 0.0) & (a <= 1.0))

    def test_lipschitz_audit_report(self, slab_field):
        """Pares a distância ≤ ρ com amostras de núcleo comuns."""
        result = lipschitz_audit(slab_field, 32, seed=0, m=16)

        assert result["n"] == 32
        assert result["bound"] == pytest.approx(slab_field.lipschitz_bound())
        assert result["max_ratio"] >= 0.0
        assert 0 <= result["violations"] <= 32

    @pytest.mark.slow
    def test_w11_report_integrals(self, slab_field):
        """As quatro integrais W^{1,1} vêm com erro padrão finito."""
        report = w11_report(slab_field, 128, seed=0)

        assert set(report) == {"bulk_complement", "bulk_gradient", "boundary_complement", "boundary_gradient"}
        for entry in report.values():
            assert math.isfinite(entry["estimate"])
            assert math.isfinite(entry["std_error"])
        assert report["bulk_complement"]["estimate"] >= 0.0
