"""
Testes para o recobrimento tubular do conjunto singular.
"""
import math

import numpy as np
import pytest

from app.application.cover import (
    build_cover,
    check_cone_bound,
    check_distance,
    check_inclusion,
    check_nesting,
    check_tiling,
    cone_constants,
    contains_batch,
    cover_contains,
    estimate_boundary_measure,
    estimate_cover_measure,
    ladder_ratios,
    loglog_slope,
)
from app.application.geometry import chart_domain
from app.application.singular import sample_singular_set
from app.core.exceptions import CoverError, EpsTooLarge
from app.domain.charts import flat_chart
from app.domain.models import CoverParams, PhasePoint, SingularSampleSet


def _params(domain, eps: float = 0.1875, eps1: float = 0.1875) -> CoverParams:
    return CoverParams(eps=eps, eps1=eps1, delta=domain.delta, c_eta=domain.c_eta)


@pytest.fixture(scope="module")
def slab_cover(slab_domain):
    """Recobrimento da placa com ε = ε₁ = 3/16, o maior valor aceito (δ/4 com δ = 3/4)."""
    return build_cover(slab_domain, _params(slab_domain))


class TestCoverParams:
    """Testes para a validação das constantes."""

    def test_valid_params(self):
        """Padrões C_* = s_* = 10 e θ = 1/8."""
        params = CoverParams(eps=0.01, eps1=0.02, delta=0.5, c_eta=1.0)

        assert params.c_star == 10.0
        assert params.theta_w == 0.125

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps": 0.0, "eps1": 0.1},
            {"eps": 0.2, "eps1": 0.1},
            {"eps": 0.1, "eps1": 0.1, "c_star": 5.0},
            {"eps": 0.1, "eps1": 0.1, "theta_w": 0.25},
            {"eps": 0.1, "eps1": 0.1, "theta_w": 0.0},
        ],
    )
    def test_invalid_params(self, kwargs):
        """ε ≤ ε₁, C_* ≥ 10 e θ ∈ (0, 1/4)."""
        with pytest.raises(ValueError):
            CoverParams(delta=0.5, c_eta=1.0, **kwargs)

    def test_cone_constants(self):
        """Constantes do lema do cone para C_η = 0."""
        params = CoverParams(eps=0.01, eps1=0.01, delta=0.5, c_eta=0.0)

        consts = cone_constants(params)

        c2 = math.sqrt(80.0 / 3.0)
        c3 = (40.0 + 80.0 * math.sqrt(1.125) + 2.0 / 1000.0) / c2
        assert consts["C_tilde"] == pytest.approx(1000.0)
        assert consts["C2"] == pytest.approx(c2)
        assert consts["C3"] == pytest.approx(c3)
        assert consts["C4"] == pytest.approx(c3)
        assert consts["N1"] == math.floor(8.0 * c3 / 0.1)

    def test_loglog_slope(self):
        """y = 2x tem inclinação 1 em escala log-log."""
        assert loglog_slope([1, 2, 4], [2, 4, 8]) == pytest.approx(1.0)
        assert math.isnan(loglog_slope([1], [2]))


class TestBuildCover:
    """Testes para build_cover."""

    def test_counts(self, slab_domain, slab_cover):
        """N_ε = ⌈δ/ε⌉, L_ε = ⌈2π/ε⌉ e M·(2N_ε + 1)² células."""
        assert slab_cover.n_eps == 4
        assert slab_cover.l_eps == math.ceil(2.0 * math.pi / 0.1875)
        assert slab_cover.sector_count == slab_cover.l_eps + 1
        assert slab_cover.cells_per_chart == 81
        assert slab_cover.cell_count == len(slab_domain.charts) * 81

    def test_frames_are_orthonormal(self, slab_cover):
        """Molduras (x̂₁, x̂₂, n_c) ortonormais."""
        assert slab_cover.frame_error() < 1e-12

    def test_tiling(self, slab_cover):
        """Retângulos de meio-lado ε₁ ≥ ε/2 cobrem o retângulo da carta."""
        assert check_tiling(slab_cover) == pytest.approx(1.0)

    def test_eps_too_large(self, slab_domain):
        """ε₁ acima de δ/4 é rejeitado; δ/4 exato é aceito."""
        # Arrange
        limit = slab_domain.delta / 4.0

        # Act / Assert
        with pytest.raises(EpsTooLarge, match="δ/4"):
            build_cover(slab_domain, _params(slab_domain, eps=limit, eps1=1.01 * limit))
        assert build_cover(slab_domain, _params(slab_domain, eps=limit, eps1=limit)).n_eps == 4

    def test_eps_between_quarter_and_delta_rejected(self, slab_domain):
        """ε₁ = δ/2 já não passa."""
        with pytest.raises(EpsTooLarge):
            build_cover(slab_domain, _params(slab_domain, eps=0.1, eps1=0.5 * slab_domain.delta))

    def test_composite_domain_rejected(self):
        """Recobrimento exige forma implícita."""
        domain = chart_domain(flat_chart())

        with pytest.raises(CoverError):
            build_cover(domain, CoverParams(eps=0.1, eps1=0.1, delta=0.5, c_eta=0.0))


class TestContains:
    """Testes para a pertinência ao recobrimento."""

    def test_slow_velocity_is_member(self, slab_cover):
        """|v| < ε₁ pertence ao recobrimento em qualquer posição."""
        assert cover_contains(slab_cover, PhasePoint.of([0.0, 0.0, 0.0], [0.1, 0.0, 0.0]))

    def test_normal_velocity_far_from_boundary(self, slab_cover):
        """No meio da placa, v normal rápido fica fora."""
        assert not cover_contains(slab_cover, PhasePoint.of([0.0, 0.0, 0.0], [0.0, 0.0, 3.0]))

    def test_tangent_velocity_near_face(self, slab_cover):
        """Perto da face, velocidade tangente está no tubo."""
        assert cover_contains(slab_cover, PhasePoint.of([0.0, 0.0, 0.45], [1.0, 0.0, 0.0]))

    def test_wider_scale_contains_more(self, slab_cover):
        """Na escala C_*ε₁ a pertinência só aumenta."""
        rng = np.random.default_rng(4)
        x = np.column_stack([rng.uniform(-1, 1, 64), rng.uniform(-1, 1, 64), rng.uniform(-0.5, 0.5, 64)])
        v = rng.standard_normal((64, 3))

        narrow, _ = contains_batch(slab_cover, x, v)
        wide, _ = contains_batch(slab_cover, x, v, scale=2.5)

        assert np.all(wide[narrow])

    def test_singular_samples_are_covered(self, slab_domain, slab_cover):
        """Amostras de 𝔖_B estão em 𝒪_{ε,ε₁}."""
        samples = sample_singular_set(slab_domain, 100, seed=3)

        result = check_inclusion(slab_cover, samples)

        assert result["fraction"] == pytest.approx(1.0)
        assert result["misses"] == 0


class TestCoverMeasure:
    """Testes para as estimativas de medida."""

    @pytest.mark.slow
    def test_cover_measure_is_finite(self, slab_cover):
        """Estimativa positiva, finita e com a cauda separada."""
        result = estimate_cover_measure(slab_cover, 256, seed=0)

        assert result["n"] == 256
        assert result["estimate"] > 0
        assert math.isfinite(result["std_error"])
        assert result["tail_bound"] > 0

    @pytest.mark.slow
    def test_boundary_measure(self, slab_cover):
        """Integral em γ₋ finita, com a parte de baixa velocidade O(ε⁴) separada."""
        result = estimate_boundary_measure(slab_cover, 128, seed=0)

        assert result["n"] == 128
        assert result["estimate"] >= 0.0
        assert math.isfinite(result["std_error"])
        assert result["low_speed_part"] > 0.0


class TestNestingAndDistance:
    """Testes para o aninhamento das escalas e a distância a 𝔖_B."""

    def test_nesting_has_no_violations(self, slab_domain, slab_cover):
        """Pontos perto da fronteira de 𝒪_{ε,ε₁} ficam em 𝒪_{ε,C_*ε₁}."""
        samples = sample_singular_set(slab_domain, 50, seed=3)

        result = check_nesting(slab_cover, samples, 64, seed=1)

        assert result["violations"] == 0
        assert 0 <= result["n_tested"] <= 64

    def test_nesting_without_samples(self, slab_cover):
        """Sem amostras não há candidatos."""
        empty = SingularSampleSet(
            x=np.zeros((0, 3)), v=np.zeros((0, 3)), chart_id=np.zeros(0, dtype=int), xi=np.zeros((0, 2)),
            theta=np.zeros(0), r_v=np.zeros(0), s=np.zeros(0),
        )

        assert check_nesting(slab_cover, empty, 64, seed=1) == {"n_tested": 0, "violations": 0}

    def test_distance_is_positive(self, slab_domain, slab_cover):
        """Pontos fora de 𝒪_{ε,C_*ε} ficam a distância positiva das amostras."""
        samples = sample_singular_set(slab_domain, 50, seed=3)

        result = check_distance(slab_cover, samples, 128, seed=2)

        assert result["min_distance"] > 0.0
        assert result["n_outside"] >= 0
        if math.isfinite(result["min_distance"]):
            assert result["ratio"] == pytest.approx(result["min_distance"] / 0.1875)

    def test_cone_bound_tests_members(self, slab_cover):
        """Com o s_* padrão a faixa da hipótese é vazia, mas há membros testados e nenhuma violação."""
        # Act
        result = check_cone_bound(slab_cover, 600, seed=0)

        # Assert
        assert not result["hypothesis_applicable"]
        assert result["n_tested"] > 0
        assert result["violations"] == 0
        assert result["violation_fraction"] == 0.0
        assert result["C4"] > 0.0

    @pytest.mark.slow
    def test_cone_hypothesis_band_is_outside_cover(self, slab_domain):
        """Com s_* = 1 e ε = 0,03 a faixa −1 ≤ n₀·v̂ ≤ −s_*C₂√ε é amostrada e nenhum ponto dela é membro."""
        # Arrange
        params = CoverParams(eps=0.03, eps1=0.03, delta=slab_domain.delta, c_eta=slab_domain.c_eta, s_star=1.0)
        cover = build_cover(slab_domain, params)

        # Act
        result = check_cone_bound(cover, 600, seed=1)

        # Assert
        assert result["hypothesis_applicable"]
        assert result["n_hypothesis"] > 0
        assert result["hypothesis_members"] == 0
        assert result["n_tested"] > 0
        assert result["violations"] == 0


class TestLadderRatios:
    """Testes para a razão entre níveis consecutivos da escada de ε."""

    def test_linear_estimates_pass(self):
        """Estimativas proporcionais a ε reproduzem a razão prevista."""
        # Act
        result = ladder_ratios([0.01, 0.04, 0.02], [1.0, 4.0, 2.0], [0.01, 0.01, 0.01])

        # Assert
        assert result["passed"]
        assert [p["levels"] for p in result["pairs"]] == [[0.04, 0.02], [0.02, 0.01]]
        for pair in result["pairs"]:
            assert pair["predicted"] == pytest.approx(2.0)
            assert pair["ratio"] == pytest.approx(2.0)

    def test_wrong_ratio_fails(self):
        """Razão 10 contra a prevista 2, com erro padrão pequeno, reprova."""
        result = ladder_ratios([0.04, 0.02], [10.0, 1.0], [0.01, 0.01])

        assert not result["passed"]
        assert result["pairs"][0]["ratio"] == pytest.approx(10.0)

    def test_large_error_covers_prediction(self):
        """Com erro padrão grande o intervalo alcança a razão prevista."""
        result = ladder_ratios([0.04, 0.02], [10.0, 1.0], [3.0, 0.5])

        assert result["passed"]
        assert result["pairs"][0]["interval"][1] == float("inf")

    def test_single_level_does_not_pass(self):
        """Sem pares não há o que aprovar."""
        result = ladder_ratios([0.04], [1.0], [0.1])

        assert result["pairs"] == []
        assert not result["passed"]
