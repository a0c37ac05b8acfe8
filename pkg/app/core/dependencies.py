"""
Dependências da aplicação para injeção no FastAPI e na CLI.
"""
import logging
from functools import lru_cache
from typing import Any, Dict, Optional

from app.application.services import DomainService, SuiteService
from app.application.use_cases import (
    ExitSampleUseCase,
    GeometryInfoUseCase,
    GetReportUseCase,
    RunSuiteUseCase,
    SingularSampleUseCase,
)
from app.core.settings import settings
from app.domain.interfaces import IReportRepository
from app.infrastructure.database import DatabaseManager
from app.infrastructure.report_repository import SqlAlchemyReportRepository

logger = logging.getLogger(__name__)


class MockDatabaseManager:
    """Mock do gerenciador de banco para quando não há banco disponível."""

    def create_tables(self):
        """Mock - não faz nada."""
        pass

    def get_session(self):
        """Mock - retorna None."""
        return None


class MockReportRepository(IReportRepository):
    """Repositório em memória para quando não há banco disponível."""

    def __init__(self):
        self.reports: Dict[str, Dict[str, Any]] = {}

    def persist_report(self, config_hash: str, payload: Dict[str, Any]) -> None:
        if config_hash in self.reports:
            logger.info(f"Mock: relatório {config_hash[:12]} já existe")
            return
        logger.info(f"Mock: relatório {payload['run_id']} mantido em memória")
        self.reports[config_hash] = {"run_id": payload["run_id"], "config_hash": config_hash,
                                     "report": payload, "created_at": None}

    def get_by_hash(self, config_hash: str) -> Optional[Dict[str, Any]]:
        return self.reports.get(config_hash)

    def get_by_run_id(self, run_id: str) -> Optional[Dict[str, Any]]:
        return next((r for r in self.reports.values() if r["run_id"] == run_id), None)


@lru_cache()
def get_database_manager() -> DatabaseManager | MockDatabaseManager:
    """Retorna instância singleton do gerenciador de banco."""
    logger.info(f"Inicializando banco de relatórios: {settings.database_url[:50]}")
    try:
        db_manager = DatabaseManager(settings.database_url)
        db_manager.create_tables()
        session = db_manager.get_session()
        session.close()
        logger.info("Banco de relatórios pronto")
        return db_manager
    except Exception as e:
        logger.error(f"Falha ao inicializar banco de dados ({type(e).__name__}): {e}")
        logger.info("Continuando com MockDatabaseManager (relatórios apenas em memória)")
        return MockDatabaseManager()


@lru_cache()
def get_report_repository() -> IReportRepository:
    """Retorna instância singleton do repositório de relatórios."""
    db_manager = get_database_manager()
    if isinstance(db_manager, MockDatabaseManager):
        logger.info("Usando repositório mock (sem persistência)")
        return MockReportRepository()
    return SqlAlchemyReportRepository(db_manager)


@lru_cache()
def get_domain_service() -> DomainService:
    """Retorna instância singleton do serviço de domínios."""
    return DomainService()


@lru_cache()
def get_suite_service() -> SuiteService:
    """Retorna instância singleton do serviço da suíte."""
    return SuiteService(get_domain_service())


@lru_cache()
def get_run_suite_use_case() -> RunSuiteUseCase:
    """Retorna instância singleton do use case de execução da suíte."""
    return RunSuiteUseCase(repository=get_report_repository(), suite_service=get_suite_service())


@lru_cache()
def get_get_report_use_case() -> GetReportUseCase:
    """Retorna instância singleton do use case de consulta de relatório."""
    return GetReportUseCase(repository=get_report_repository())


@lru_cache()
def get_geometry_info_use_case() -> GeometryInfoUseCase:
    """Retorna instância singleton do use case de resumo geométrico."""
    return GeometryInfoUseCase(get_domain_service())


@lru_cache()
def get_exit_sample_use_case() -> ExitSampleUseCase:
    return ExitSampleUseCase(get_domain_service())


@lru_cache()
def get_singular_sample_use_case() -> SingularSampleUseCase:
    return SingularSampleUseCase(get_suite_service())
