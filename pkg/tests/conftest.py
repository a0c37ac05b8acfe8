"""
Configurações e fixtures compartilhadas para testes.
"""
from typing import Any, Dict
from unittest.mock import Mock

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.application.geometry import build_domain
from app.domain.interfaces import IReportRepository
from app.domain.models import CheckResult, Report


@pytest.fixture(scope="session")
def ball_domain():
    """Bola unitária decomposta numa grade de verificação pequena."""
    return build_domain("ball", grid=16)


@pytest.fixture(scope="session")
def slab_domain():
    """Placa periódica (meia-altura 0,5, meio-período 1)."""
    return build_domain("slab", grid=16)


@pytest.fixture(scope="session")
def bump_domain():
    """Domínio com saliência gaussiana (padrões da galeria)."""
    return build_domain("bump", grid=16)


@pytest.fixture
def test_client():
    """Cliente de teste para FastAPI."""
    from app.main import app
    # Limpar cache das dependências para testes
    from app.core.dependencies import (
        get_database_manager,
        get_domain_service,
        get_exit_sample_use_case,
        get_geometry_info_use_case,
        get_get_report_use_case,
        get_report_repository,
        get_run_suite_use_case,
        get_singular_sample_use_case,
        get_suite_service,
    )

    for factory in (
        get_database_manager,
        get_report_repository,
        get_domain_service,
        get_suite_service,
        get_run_suite_use_case,
        get_get_report_use_case,
        get_geometry_info_use_case,
        get_exit_sample_use_case,
        get_singular_sample_use_case,
    ):
        factory.cache_clear()

    return TestClient(app)


@pytest.fixture
def mock_repository():
    """Mock do repositório de relatórios."""
    mock = Mock(spec=IReportRepository)
    mock.get_by_run_id.return_value = None
    mock.get_by_hash.return_value = None
    return mock


@pytest.fixture
def sample_config() -> Dict[str, Any]:
    """Configuração mínima de experimento para testes."""
    return {
        "domain": {"kind": "analytic-ball", "params": {"radius": 1.0}},
        "modules": ["geometry"],
        "seed": 7,
    }


@pytest.fixture
def sample_check() -> CheckResult:
    """Verificação aprovada de exemplo."""
    return CheckResult(
        name="geometry.area",
        estimate=12.566,
        std_error=0.01,
        threshold=0.05,
        passed=True,
        details={"exact": float(4 * np.pi)},
    )


@pytest.fixture
def sample_report(sample_check) -> Report:
    """Relatório de exemplo com uma verificação."""
    return Report(
        run_id="0123456789abcdef",
        config={"domain": {"kind": "analytic-ball"}},
        seed=7,
        version="1.0.0",
        checks=[sample_check],
    )
