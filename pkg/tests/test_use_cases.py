"""
Testes para os use cases da aplicação.
"""
import json
from datetime import datetime
from unittest.mock import Mock, patch

import numpy as np
import pytest

from app.application.dtos import ExperimentConfig
from app.application.services import DomainService, SuiteContext, SuiteService
from app.application.use_cases import (
    ExitSampleUseCase,
    GeometryInfoUseCase,
    GetReportUseCase,
    RunSuiteUseCase,
    SingularSampleUseCase,
    run_id_for,
)
from app.core.exceptions import ConfigInvalid, RuntimeBudgetExceeded
from app.domain.models import CheckResult


def _suite_service(sample_check, dumps=None) -> Mock:
    service = Mock(spec=SuiteService)
    service.context.return_value = SuiteContext(domain=Mock(), config=Mock(), dumps=dumps or {})
    service.run_module.return_value = [sample_check]
    return service


class TestRunSuiteUseCase:
    """Testes para RunSuiteUseCase."""

    def test_execute_success_happy_path(self, mock_repository, sample_config, sample_check):
        """Testa fluxo de sucesso completo."""
        # Arrange
        config = ExperimentConfig(**sample_config)
        suite_service = _suite_service(sample_check)
        progress = Mock()
        use_case = RunSuiteUseCase(repository=mock_repository, suite_service=suite_service)

        # Act
        report = use_case.execute(config, progress)

        # Assert
        assert report.run_id == config.config_hash()[:16] == run_id_for(config)
        assert report.passed
        assert report.seed == 7
        suite_service.run_module.assert_called_once()
        mock_repository.persist_report.assert_called_once()
        persisted_hash, payload = mock_repository.persist_report.call_args[0]
        assert persisted_hash == config.config_hash()
        assert payload["checks"][0]["name"] == "geometry.area"
        progress.assert_called_with(100, "Concluído")

    def test_failed_check_fails_report(self, mock_repository, sample_config):
        """Uma verificação reprovada reprova o relatório."""
        failed = CheckResult("geometry.area", 1.0, None, 0.5, passed=False)
        use_case = RunSuiteUseCase(mock_repository, _suite_service(failed))

        report = use_case.execute(ExperimentConfig(**sample_config))

        assert not report.passed

    def test_publish_writes_report_and_dumps(self, mock_repository, sample_config, sample_check, tmp_path):
        """Relatório JSON e despejos CSV vão para o diretório de saída."""
        # Arrange
        dumps = {"singular_samples": (["a", "b"], np.array([[1.0, 2.0]]))}
        config = ExperimentConfig(**sample_config, output_dir=str(tmp_path))
        use_case = RunSuiteUseCase(mock_repository, _suite_service(sample_check, dumps))

        # Act
        use_case.execute(config, report_name="run.json")

        # Assert
        written = json.loads((tmp_path / "run.json").read_text(encoding="utf-8"))
        assert written["run_id"] == run_id_for(config)
        assert (tmp_path / "singular_samples.csv").read_text(encoding="utf-8").startswith("a,b\r\n")

    def test_budget_exceeded_between_modules(self, mock_repository, sample_config, sample_check, tmp_path):
        """Orçamento esgotado entre módulos publica o parcial e não persiste."""
        # Arrange
        config = ExperimentConfig(
            **{**sample_config, "modules": ["geometry", "raytrace"]}, budget_seconds=5.0, output_dir=str(tmp_path)
        )
        use_case = RunSuiteUseCase(mock_repository, _suite_service(sample_check))

        # Act
        with patch("app.application.use_cases.time.perf_counter", side_effect=[0.0, 0.0, 10.0]):
            with pytest.raises(RuntimeBudgetExceeded) as exc:
                use_case.execute(config)

        # Assert
        assert exc.value.exit_code == 3
        partial = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert len(partial["checks"]) == 1
        mock_repository.persist_report.assert_not_called()

    def test_unknown_scenario_rejected(self, mock_repository, sample_config, sample_check):
        """Validações extras rodam antes de qualquer módulo."""
        config = ExperimentConfig(**sample_config, transport={"scenario": "nope"})
        suite_service = _suite_service(sample_check)

        with pytest.raises(ConfigInvalid):
            RunSuiteUseCase(mock_repository, suite_service).execute(config)

        suite_service.run_module.assert_not_called()


class TestGetReportUseCase:
    """Testes para GetReportUseCase."""

    def test_execute_found(self, mock_repository, sample_report):
        """Testa recuperação de relatório existente."""
        # Arrange
        created = datetime(2024, 1, 1, 12, 0, 0)
        mock_repository.get_by_run_id.return_value = {
            "run_id": sample_report.run_id,
            "config_hash": "f" * 64,
            "report": sample_report.to_dict(),
            "created_at": created,
        }

        # Act
        result = GetReportUseCase(mock_repository).execute(sample_report.run_id)

        # Assert
        assert result.run_id == sample_report.run_id
        assert result.passed
        assert result.persisted_at == created
        mock_repository.get_by_run_id.assert_called_once_with(sample_report.run_id)

    def test_execute_not_found(self, mock_repository):
        """Testa relatório inexistente."""
        assert GetReportUseCase(mock_repository).execute("abc123") is None

    def test_execute_invalid_run_id(self, mock_repository):
        """Testa run_id malformado."""
        with pytest.raises(ConfigInvalid):
            GetReportUseCase(mock_repository).execute("../secret")

        mock_repository.get_by_run_id.assert_not_called()


class TestSampleUseCases:
    """Testes para os use cases de resumo e amostragem."""

    @pytest.fixture
    def slab_config(self, tmp_path):
        return ExperimentConfig(
            domain={"kind": "flat-slab", "chart_grid": 16},
            modules=["geometry"],
            budgets={"singular": 50},
            seed=5,
            output_dir=str(tmp_path),
        )

    def test_geometry_info(self, slab_config):
        """Resumo da placa com volume exato 4."""
        info = GeometryInfoUseCase(DomainService()).execute(slab_config)

        assert info.kind == "flat-slab"
        assert info.volume == pytest.approx(4.0)
        assert info.chart_count > 0

    def test_exit_sample_writes_csv(self, slab_config, tmp_path):
        """Tabela de saídas com cabeçalho e resumo JSON."""
        summary = ExitSampleUseCase(DomainService()).execute(slab_config, 50)

        assert summary["n"] == 50
        assert 0 <= summary["hits"] <= 50
        assert (tmp_path / "exit_samples.csv").read_text(encoding="utf-8").startswith("x1,x2,x3")
        assert (tmp_path / "exit_report.json").exists()

    def test_singular_sample_writes_csv(self, slab_config, tmp_path):
        """Amostras do conjunto singular e auditoria de resíduos."""
        summary = SingularSampleUseCase(SuiteService(DomainService())).execute(slab_config)

        assert summary["n"] > 0
        assert summary["residuals"]["pass_fraction"] == pytest.approx(1.0)
        assert (tmp_path / "singular_samples.csv").exists()
