"""
Use cases da aplicação para orquestrar execuções da suíte.
"""
import logging
import time
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from app import __version__
from app.application.dtos import ExperimentConfig, GeometryInfoResponse, ReportResponse
from app.application.geometry import geometry_info
from app.application.raytrace import sample_rays, trace_exits
from app.application.services import DomainService, SuiteContext, SuiteService
from app.application.singular import audit_residuals
from app.application.validators import ConfigValidator
from app.core.exceptions import RuntimeBudgetExceeded
from app.core.rng import stream
from app.domain.interfaces import IReportRepository
from app.domain.models import CheckResult, Report
from app.infrastructure.sample_writer import ReportWriter, to_jsonable

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, str], None]

EXIT_COLUMNS = ["x1", "x2", "x3", "v1", "v2", "v3", "t_b", "xb1", "xb2", "xb3", "speed_normal", "chart_id", "grazing"]


def run_id_for(config: ExperimentConfig) -> str:
    """Identificador determinístico: prefixo do hash da configuração."""
    return config.config_hash()[:16]


class RunSuiteUseCase:
    """Use case para executar os módulos selecionados e publicar o relatório."""

    def __init__(
        self,
        repository: IReportRepository,
        suite_service: SuiteService,
        writer_factory: Callable[[str], ReportWriter] = ReportWriter,
    ):
        """
        Inicializa o use case.

        Args:
            repository: Repositório de relatórios
            suite_service: Serviço que executa as verificações
            writer_factory: Constrói o escritor para um diretório de saída
        """
        self.repository = repository
        self.suite_service = suite_service
        self.writer_factory = writer_factory

    def _publish(self, config: ExperimentConfig, report: Report, ctx: SuiteContext, report_name: str) -> None:
        if not config.output_dir:
            return
        writer = self.writer_factory(config.output_dir)
        writer.write_json(report_name, report.to_dict())
        for name, (columns, rows) in sorted(ctx.dumps.items()):
            writer.write_csv(f"{name}.csv", columns, rows)

    def execute(
        self,
        config: ExperimentConfig,
        progress: Optional[ProgressCallback] = None,
        report_name: str = "report.json",
    ) -> Report:
        """
        Executa a suíte para uma configuração.

        Args:
            config: Configuração validada
            progress: Callback opcional (percentual, mensagem)
            report_name: Nome do arquivo JSON no diretório de saída

        Returns:
            Relatório com todas as verificações executadas

        Raises:
            ConfigInvalid: Se a configuração falhar nas validações extras
            GeometryError: Se o domínio não puder ser construído
            RuntimeBudgetExceeded: Se o orçamento de tempo acabar entre módulos
            RepositoryError: Se falhar na persistência
        """
        ConfigValidator.validate(config)
        config_hash = config.config_hash()
        run_id = run_id_for(config)
        logger.info(f"Execução {run_id}: módulos {config.modules}, semente {config.seed}")

        started = time.perf_counter()
        ctx = self.suite_service.context(config)
        checks: List[CheckResult] = []
        total = len(config.modules)

        for index, module in enumerate(config.modules):
            elapsed = time.perf_counter() - started
            if elapsed > config.budget_seconds:
                partial = Report(run_id, config.echo(), config.seed, __version__, checks)
                self._publish(config, partial, ctx, report_name)
                raise RuntimeBudgetExceeded(
                    f"Orçamento de {config.budget_seconds:.0f}s esgotado antes de {module} ({elapsed:.1f}s)"
                )
            if progress:
                progress(int(100 * index / total), f"Executando {module}")
            checks.extend(self.suite_service.run_module(module, ctx))

        report = Report(run_id, config.echo(), config.seed, __version__, checks)
        logger.info(
            f"Execução {run_id} concluída em {time.perf_counter() - started:.1f}s: "
            f"{sum(c.passed for c in checks)}/{len(checks)} verificações aprovadas"
        )
        self._publish(config, report, ctx, report_name)
        self.repository.persist_report(config_hash, to_jsonable(report.to_dict()))
        if progress:
            progress(100, "Concluído")
        return report


class GetReportUseCase:
    """Use case para recuperar relatório persistido."""

    def __init__(self, repository: IReportRepository):
        """
        Inicializa o use case.

        Args:
            repository: Repositório de relatórios
        """
        self.repository = repository

    def execute(self, run_id: str) -> Optional[ReportResponse]:
        """
        Recupera um relatório pelo ID da execução.

        Returns:
            Relatório se encontrado, None caso contrário

        Raises:
            ConfigInvalid: Se o run_id for malformado
            RepositoryError: Se falhar na consulta
        """
        run_id = ConfigValidator.validate_run_id(run_id)
        record = self.repository.get_by_run_id(run_id)
        if not record:
            logger.info(f"Relatório {run_id} não encontrado")
            return None
        return ReportResponse(**record["report"], persisted_at=record.get("created_at"))


class GeometryInfoUseCase:
    """Use case para o resumo geométrico de um domínio."""

    def __init__(self, domain_service: DomainService):
        self.domain_service = domain_service

    def execute(self, config: ExperimentConfig) -> GeometryInfoResponse:
        """
        Constrói o domínio e resume a decomposição.

        Raises:
            GeometryError: Se a decomposição falhar
        """
        ConfigValidator.validate_domain_params(config)
        domain = self.domain_service.build(config.domain)
        return GeometryInfoResponse(**to_jsonable(geometry_info(domain, config.seed)))


class ExitSampleUseCase:
    """Use case para amostrar tempos e pontos de saída para trás."""

    def __init__(self, domain_service: DomainService, writer_factory: Callable[[str], ReportWriter] = ReportWriter):
        self.domain_service = domain_service
        self.writer_factory = writer_factory

    def execute(self, config: ExperimentConfig, n: int) -> Dict[str, Any]:
        """
        Traça n raios aleatórios e resume os tempos de saída.

        Returns:
            Resumo com semente e eco da configuração
        """
        ConfigValidator.validate_domain_params(config)
        domain = self.domain_service.build(config.domain)
        x, v = sample_rays(domain, n, stream(config.seed, "exit_sample"))
        exits = trace_exits(domain, x, v)
        finite = np.isfinite(exits.t)
        summary = {
            "seed": config.seed,
            "config": config.echo(),
            "n": n,
            "hits": int(finite.sum()),
            "grazing": int(exits.grazing.sum()),
            "t_b_mean": float(exits.t[finite].mean()) if finite.any() else None,
            "t_b_max": float(exits.t[finite].max()) if finite.any() else None,
        }
        if config.output_dir:
            rows = np.column_stack([x, v, exits.t, exits.x_exit, exits.speed_normal, exits.chart_id, exits.grazing])
            writer = self.writer_factory(config.output_dir)
            writer.write_csv("exit_samples.csv", EXIT_COLUMNS, rows)
            writer.write_json("exit_report.json", summary)
        return summary


class SingularSampleUseCase:
    """Use case para amostrar o conjunto singular e auditar os resíduos."""

    def __init__(self, suite_service: SuiteService, writer_factory: Callable[[str], ReportWriter] = ReportWriter):
        self.suite_service = suite_service
        self.writer_factory = writer_factory

    def execute(self, config: ExperimentConfig) -> Dict[str, Any]:
        """
        Amostra budgets.singular pontos e escreve a tabela CSV.

        Raises:
            SamplingError: Se o domínio não tiver direções rasantes
        """
        ConfigValidator.validate_domain_params(config)
        ctx = self.suite_service.context(config)
        samples = self.suite_service.singular_samples(ctx)
        summary = {
            "seed": config.seed,
            "config": config.echo(),
            "n": len(samples),
            "failed": samples.failed,
            "residuals": audit_residuals(samples),
        }
        if config.output_dir:
            writer = self.writer_factory(config.output_dir)
            columns, rows = ctx.dumps["singular_samples"]
            writer.write_csv("singular_samples.csv", columns, rows)
            writer.write_json("singular_report.json", summary)
        return summary

