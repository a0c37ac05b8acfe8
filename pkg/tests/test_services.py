"""
Testes para o SuiteService sobre a placa, com orçamentos mínimos.
"""
import math

import numpy as np
import pytest

from app.application.dtos import ExperimentConfig
from app.application.services import DomainService, SuiteContext, SuiteService
from app.domain.models import SingularSampleSet


@pytest.fixture(scope="module")
def slab_context():
    """Contexto da placa com escada ε ∈ {3/16, 3/32} (3/16 = δ/4)."""
    config = ExperimentConfig(
        domain={"kind": "flat-slab", "chart_grid": 16},
        modules=["cover", "cutoff"],
        ladders={"eps": [0.1875, 0.09375]},
        budgets={"singular": 30, "cover": 64, "cutoff": 16},
        seed=11,
    )
    service = SuiteService(DomainService())
    return service, service.context(config)


def _empty_samples() -> SingularSampleSet:
    return SingularSampleSet(
        x=np.zeros((0, 3)),
        v=np.zeros((0, 3)),
        chart_id=np.zeros(0, dtype=int),
        xi=np.zeros((0, 2)),
        theta=np.zeros(0),
        r_v=np.zeros(0),
        s=np.zeros(0),
    )


def _no_launches(domain, samples, n=1000):
    return {"n": 0, "min_normal_norm": math.nan, "min_singular_value": math.nan}


@pytest.mark.slow
class TestSuiteService:
    """Testes para as baterias de verificação por módulo."""

    def test_cover_checks_names(self, slab_context):
        """Cada nível da escada produz as seis verificações do recobrimento."""
        # Arrange
        service, ctx = slab_context

        # Act
        results = service.run_module("cover", ctx)

        # Assert
        names = [r.name for r in results]
        for eps in ("0.1875", "0.09375"):
            for check in ("inclusion", "cone", "nesting", "distance", "measure", "boundary_measure"):
                assert f"cover.{check}[{eps}]" in names
        assert names[-5:] == [
            "cover.tiling",
            "cover.measure_slope",
            "cover.measure_ratio",
            "cover.boundary_slope",
            "cover.boundary_ratio",
        ]
        assert all(r.wall_time >= 0.0 for r in results)

    def test_cover_invariants_on_slab(self, slab_context):
        """Inclusão completa, nenhuma violação de aninhamento e cone com membros testados."""
        service, ctx = slab_context

        results = {r.name: r for r in service.run_module("cover", ctx)}

        assert results["cover.inclusion[0.1875]"].passed
        assert results["cover.nesting[0.1875]"].estimate == 0
        assert results["cover.tiling"].passed
        cone = results["cover.cone[0.1875]"]
        assert cone.details["n_tested"] > 0
        assert cone.passed

    def test_measure_ratio_reports_pairs(self, slab_context):
        """A razão entre níveis compara com ε_a/ε_b = 2."""
        service, ctx = slab_context

        results = {r.name: r for r in service.run_module("cover", ctx)}

        ratio = results["cover.measure_ratio"]
        assert ratio.threshold == [pytest.approx(2.0)]
        assert len(ratio.details["pairs"]) == 1

    def test_cutoff_checks_names(self, slab_context):
        """Massa, anulação, W^{1,1}, Lipschitz e as comparações entre níveis."""
        service, ctx = slab_context

        names = [r.name for r in service.run_module("cutoff", ctx)]

        assert names[0] == "cutoff.mass"
        assert "cutoff.lipschitz[0.09375]" in names
        assert names[-2:] == ["cutoff.w11_bounded", "cutoff.complement_slope"]

    def test_derivatives_audit_whole_budget(self, ball_domain):
        """A auditoria de derivadas usa todos os raios válidos acima do corte de incidência."""
        # Arrange
        config = ExperimentConfig(domain={"kind": "analytic-ball"}, budgets={"rays": 60}, seed=3)
        ctx = SuiteContext(domain=ball_domain, config=config)

        # Act
        results = {r.name: r for r in SuiteService(DomainService()).raytrace_checks(ctx)}

        # Assert
        check = results["raytrace.derivatives"]
        assert check.details["rays"] == 60
        assert check.details["n"] > 0
        assert check.details["n"] + check.details["near_grazing_excluded"] <= 60
        assert check.estimate < 1e-4
        assert check.passed


class TestCodimApplicability:
    """singular.codim sem lançamentos não convexos depende da forma."""

    def _codim(self, domain, monkeypatch):
        monkeypatch.setattr("app.application.services.codim_audit", _no_launches)
        config = ExperimentConfig(domain={"kind": domain.kind}, seed=0)
        ctx = SuiteContext(domain=domain, config=config, samples=_empty_samples())
        results = {r.name: r for r in SuiteService(DomainService()).singular_checks(ctx)}
        return results["singular.codim"]

    def test_convex_domain_is_not_applicable(self, ball_domain, monkeypatch):
        """Na bola a ausência de lançamentos não convexos é esperada."""
        # Act
        check = self._codim(ball_domain, monkeypatch)

        # Assert
        assert check.passed
        assert check.details["applicable"] is False

    def test_nonconvex_domain_fails_without_launches(self, bump_domain, monkeypatch):
        """No bump nenhum lançamento não convexo amostrado é falha."""
        # Act
        check = self._codim(bump_domain, monkeypatch)

        # Assert
        assert not check.passed
        assert check.details["applicable"] is True
