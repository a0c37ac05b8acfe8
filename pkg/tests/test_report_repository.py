"""
Testes para o repositório SQLAlchemy de relatórios.
"""
from unittest.mock import Mock

import pytest

from app.core.dependencies import MockReportRepository
from app.core.exceptions import RepositoryError
from app.infrastructure.database import DatabaseManager
from app.infrastructure.report_repository import SqlAlchemyReportRepository
from app.infrastructure.sample_writer import to_jsonable


@pytest.fixture
def repository(tmp_path):
    """Repositório sobre um SQLite temporário."""
    db_manager = DatabaseManager(f"sqlite:///{tmp_path / 'reports.db'}")
    db_manager.create_tables()
    return SqlAlchemyReportRepository(db_manager)


class TestSqlAlchemyReportRepository:
    """Testes para SqlAlchemyReportRepository."""

    def test_persist_and_get(self, repository, sample_report):
        """Relatório persistido é recuperado por hash e por run_id."""
        # Arrange
        payload = to_jsonable(sample_report.to_dict())

        # Act
        repository.persist_report("a" * 64, payload)

        # Assert
        by_hash = repository.get_by_hash("a" * 64)
        by_run = repository.get_by_run_id(sample_report.run_id)
        assert by_hash["report"] == payload
        assert by_run["config_hash"] == "a" * 64
        assert by_run["created_at"] is not None
        assert by_run["seed"] == sample_report.seed
        assert by_run["passed"] == sample_report.passed
        assert by_run["n_checks"] == len(sample_report.checks)
        assert by_run["domain_kind"] == "analytic-ball"

    def test_persist_is_idempotent(self, repository, sample_report):
        """Mesmo hash não duplica nem sobrescreve."""
        payload = to_jsonable(sample_report.to_dict())
        repository.persist_report("b" * 64, payload)

        repository.persist_report("b" * 64, {**payload, "seed": 99})

        assert repository.get_by_hash("b" * 64)["report"]["seed"] == sample_report.seed

    def test_missing(self, repository):
        assert repository.get_by_hash("c" * 64) is None
        assert repository.get_by_run_id("deadbeef") is None

    def test_session_failure(self):
        """Erro no banco vira RepositoryError."""
        db_manager = Mock(spec=DatabaseManager)
        session = db_manager.get_session.return_value
        session.query.side_effect = RuntimeError("sem conexão")

        with pytest.raises(RepositoryError):
            SqlAlchemyReportRepository(db_manager).get_by_run_id("abc")

        session.close.assert_called_once()


class TestMockReportRepository:
    """Testes para o repositório em memória usado sem banco."""

    def test_keeps_first_report_per_hash(self, sample_report):
        """Mesma semântica idempotente do repositório SQLAlchemy."""
        repository = MockReportRepository()
        payload = to_jsonable(sample_report.to_dict())

        repository.persist_report("d" * 64, payload)
        repository.persist_report("d" * 64, {**payload, "run_id": "outro"})

        assert repository.get_by_run_id(sample_report.run_id)["report"] == payload
        assert repository.get_by_run_id("outro") is None
        assert repository.get_by_hash("d" * 64)["config_hash"] == "d" * 64
