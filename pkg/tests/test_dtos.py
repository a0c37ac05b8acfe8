"""
Testes para os DTOs da aplicação.
"""
import json

import pytest
from pydantic import ValidationError

from app.application.dtos import (
    ALL_MODULES,
    Budgets,
    DomainSpec,
    ExperimentConfig,
    Ladders,
    ReportResponse,
)
from app.core.exceptions import ConfigInvalid


class TestDomainSpec:
    """Testes para DomainSpec."""

    def test_valid_domain(self):
        """Testa criação de domínio válido."""
        spec = DomainSpec(kind="graph-bump", params={"h": 0.2})

        assert spec.kind == "graph-bump"
        assert spec.delta is None

    def test_unknown_kind(self):
        """Testa tipo fora da galeria."""
        with pytest.raises(ValidationError):
            DomainSpec(kind="torus")

    def test_small_chart_grid(self):
        """Testa grade de cartas menor que 4."""
        with pytest.raises(ValidationError):
            DomainSpec(kind="flat-slab", chart_grid=2)


class TestLadders:
    """Testes para Ladders."""

    def test_defaults(self):
        """Testa escadas padrão."""
        ladders = Ladders()

        assert ladders.eps == [0.04, 0.02, 0.01]
        assert ladders.depth == [3, 4, 5, 6]

    @pytest.mark.parametrize(
        "field,values",
        [
            ("eps", [0.01, 0.01]),
            ("eps", [0.04, -0.02]),
            ("delta", [0.5, 0.25, 0.5]),
            ("h", []),
            ("depth", [-1, 0]),
            ("depth", [3, 3]),
        ],
    )
    def test_invalid_ladder(self, field, values):
        """Testa escadas não positivas ou não monótonas."""
        with pytest.raises(ValidationError):
            Ladders(**{field: values})

    def test_increasing_ladder_is_accepted(self):
        """Monótona crescente também vale."""
        assert Ladders(eps=[0.01, 0.02]).eps == [0.01, 0.02]


class TestExperimentConfig:
    """Testes para ExperimentConfig."""

    def test_defaults(self):
        """Testa módulos e orçamentos padrão."""
        config = ExperimentConfig(domain={"kind": "analytic-ball"})

        assert config.modules == ALL_MODULES
        assert config.budgets == Budgets()
        assert config.transport.scenario == "maxwellian-check"

    def test_empty_modules(self):
        """Testa seletor vazio."""
        with pytest.raises(ValidationError):
            ExperimentConfig(domain={"kind": "analytic-ball"}, modules=[])

    def test_duplicated_modules(self):
        """Testa seletor com repetições."""
        with pytest.raises(ValidationError):
            ExperimentConfig(domain={"kind": "analytic-ball"}, modules=["geometry", "geometry"])

    def test_hash_ignores_runtime_fields(self, sample_config):
        """Hash independe de threads, diretório e orçamento de tempo."""
        # Arrange
        config = ExperimentConfig(**sample_config)
        other = config.model_copy(update={"threads": 8, "output_dir": "elsewhere", "budget_seconds": 5.0})

        # Act / Assert
        assert other.config_hash() == config.config_hash()
        assert "threads" not in other.echo()

    def test_hash_depends_on_seed(self, sample_config):
        """Semente diferente, hash diferente."""
        config = ExperimentConfig(**sample_config)
        other = config.model_copy(update={"seed": 8})

        assert other.config_hash() != config.config_hash()
        assert len(other.config_hash()) == 64

    def test_parse_wraps_validation_error(self):
        """parse converte ValidationError em ConfigInvalid."""
        with pytest.raises(ConfigInvalid) as exc:
            ExperimentConfig.parse({"domain": {"kind": "cube"}})

        assert exc.value.exit_code == 64

    def test_from_file(self, tmp_path):
        """Testa leitura de arquivo JSON."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"domain": {"kind": "flat-slab"}, "modules": ["geometry"], "seed": 3}))

        config = ExperimentConfig.from_file(str(path))

        assert config.seed == 3
        assert config.modules == ["geometry"]

    def test_from_file_errors(self, tmp_path):
        """Arquivo ausente, JSON inválido e lista no topo."""
        bad_json = tmp_path / "bad.json"
        bad_json.write_text("{nope")
        top_list = tmp_path / "list.json"
        top_list.write_text("[1, 2]")

        for path in (tmp_path / "missing.json", bad_json, top_list):
            with pytest.raises(ConfigInvalid):
                ExperimentConfig.from_file(str(path))


class TestReportResponse:
    """Testes para ReportResponse."""

    def test_valid_response(self, sample_config):
        """Testa criação de response válido."""
        response = ReportResponse(
            run_id="0123456789abcdef",
            seed=7,
            version="1.0.0",
            passed=True,
            config=ExperimentConfig(**sample_config).echo(),
            checks=[{"name": "geometry.area", "estimate": 12.5, "std_error": "inf", "passed": True}],
        )

        assert response.checks[0].std_error == "inf"
        assert response.persisted_at is None
