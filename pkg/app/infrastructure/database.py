"""
Configuração e modelos do banco de relatórios.
"""
import json
from datetime import datetime, timezone
from typing import Any, Dict

from sqlalchemy import Boolean, Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

Base = declarative_base()


def _utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


class ReportRecord(Base):
    """Relatório de uma execução da suíte, indexado por hash da configuração e run_id."""

    __tablename__ = "reports"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String(64), nullable=False, index=True)
    config_hash = Column(String(64), unique=True, nullable=False, index=True)
    domain_kind = Column(String(32), nullable=True, index=True)
    seed = Column(Integer, nullable=False)
    passed = Column(Boolean, nullable=False)
    n_checks = Column(Integer, nullable=False, default=0)
    report = Column(Text, nullable=False)  # JSON como texto para compatibilidade SQLite
    created_at = Column(DateTime, nullable=False, default=_utcnow)

    @classmethod
    def from_payload(cls, config_hash: str, payload: Dict[str, Any]) -> "ReportRecord":
        domain = payload.get("config", {}).get("domain", {})
        return cls(
            run_id=payload["run_id"],
            config_hash=config_hash,
            domain_kind=domain.get("kind") if isinstance(domain, dict) else None,
            seed=int(payload["seed"]),
            passed=bool(payload["passed"]),
            n_checks=len(payload.get("checks", [])),
            report=json.dumps(payload, ensure_ascii=False, sort_keys=True),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "domain_kind": self.domain_kind,
            "seed": self.seed,
            "passed": self.passed,
            "n_checks": self.n_checks,
            "report": json.loads(self.report) if isinstance(self.report, str) else self.report,
            "created_at": self.created_at,
        }


class DatabaseManager:
    """Engine e fábrica de sessões do banco de relatórios."""

    def __init__(self, database_url: str):
        connect_args = {"check_same_thread": False} if database_url.startswith("sqlite") else {}
        self.engine = create_engine(database_url, connect_args=connect_args)
        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)

    def create_tables(self):
        """Cria as tabelas no banco de dados."""
        Base.metadata.create_all(bind=self.engine)

    def get_session(self) -> Session:
        return self.SessionLocal()
