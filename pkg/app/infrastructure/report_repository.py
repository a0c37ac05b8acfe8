"""
Repositório para persistência de relatórios de verificação.
"""
import logging
from typing import Any, Dict, Optional

from sqlalchemy.exc import IntegrityError
from sqlalchemy.orm import Session

from app.core.exceptions import RepositoryError
from app.domain.interfaces import IReportRepository
from app.infrastructure.database import DatabaseManager, ReportRecord

logger = logging.getLogger(__name__)


class SqlAlchemyReportRepository(IReportRepository):
    """Repositório SQLAlchemy para relatórios."""

    def __init__(self, db_manager: DatabaseManager):
        """
        Inicializa o repositório.

        Args:
            db_manager: Gerenciador do banco de dados
        """
        self.db_manager = db_manager

    def persist_report(self, config_hash: str, payload: Dict[str, Any]) -> None:
        """
        Persiste um relatório; um hash já existente é mantido.

        Raises:
            RepositoryError: Se falhar na persistência
        """
        session: Session = self.db_manager.get_session()
        try:
            existing = session.query(ReportRecord).filter_by(config_hash=config_hash).first()
            if existing:
                logger.info(f"Relatório {config_hash[:12]} já existe, pulando persistência")
                return
            session.add(ReportRecord.from_payload(config_hash, payload))
            session.commit()
            logger.info(f"Relatório {payload['run_id']} persistido")
        except IntegrityError:
            session.rollback()
            logger.warning(f"Relatório {config_hash[:12]} já existe (constraint violation)")
        except Exception as e:
            session.rollback()
            logger.error(f"Erro ao persistir relatório {config_hash[:12]}: {e}")
            raise RepositoryError(f"Falha na persistência: {str(e)}")
        finally:
            session.close()

    def _find(self, **criteria) -> Optional[Dict[str, Any]]:
        session: Session = self.db_manager.get_session()
        try:
            record = session.query(ReportRecord).filter_by(**criteria).first()
            return record.to_dict() if record else None
        except Exception as e:
            logger.error(f"Erro ao consultar relatório {criteria}: {e}")
            raise RepositoryError(f"Falha na consulta: {str(e)}")
        finally:
            session.close()

    def get_by_hash(self, config_hash: str) -> Optional[Dict[str, Any]]:
        """
        Recupera um relatório pelo hash.

        Raises:
            RepositoryError: Se falhar na consulta
        """
        return self._find(config_hash=config_hash)

    def get_by_run_id(self, run_id: str) -> Optional[Dict[str, Any]]:
        """
        Recupera um relatório pelo ID da execução.

        Raises:
            RepositoryError: Se falhar na consulta
        """
        return self._find(run_id=run_id)
