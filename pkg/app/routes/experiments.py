"""
Rotas para execução e consulta de experimentos.
"""
import logging
from typing import Any, Dict

from fastapi import APIRouter, BackgroundTasks, Body, Depends, HTTPException, status

from app.application.dtos import ExperimentAccepted, ExperimentConfig, ReportResponse
from app.application.use_cases import GetReportUseCase, RunSuiteUseCase
from app.application.validators import ConfigValidator
from app.core.dependencies import get_get_report_use_case, get_run_suite_use_case
from app.core.exceptions import ConfigInvalid, RepositoryError
from app.core.task_manager import TaskStatus, task_manager

logger = logging.getLogger(__name__)
router = APIRouter(prefix="/experiments", tags=["experiments"])


def _run_and_summarize(use_case: RunSuiteUseCase, config: ExperimentConfig, task_id: str) -> Dict[str, Any]:
    report = use_case.execute(config, progress=task_manager.progress_callback(task_id))
    return {
        "run_id": report.run_id,
        "passed": report.passed,
        "checks": len(report.checks),
        "failed": [c.name for c in report.checks if not c.passed],
    }


@router.post("", response_model=ExperimentAccepted, status_code=status.HTTP_202_ACCEPTED)
async def start_experiment(
    background_tasks: BackgroundTasks,
    payload: Dict[str, Any] = Body(...),
    use_case: RunSuiteUseCase = Depends(get_run_suite_use_case),
) -> ExperimentAccepted:
    """
    Valida a configuração e inicia a suíte em segundo plano.

    Args:
        payload: Configuração do experimento (JSON)
        use_case: Use case de execução

    Returns:
        ID da tarefa e hash da configuração

    Raises:
        HTTPException: 422 se a configuração for inválida
    """
    try:
        config = ConfigValidator.validate(ExperimentConfig.parse(payload))
        output_dir = ConfigValidator.safe_output_dir(config.output_dir)
        config = config.model_copy(update={"output_dir": str(output_dir)})
    except ConfigInvalid as e:
        logger.error(f"Configuração rejeitada: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))

    config_hash = config.config_hash()
    task_id = task_manager.create_task("suite", config_hash)
    background_tasks.add_task(task_manager.run_task, task_id, _run_and_summarize, use_case, config, task_id)
    logger.info(f"Experimento {config_hash[:12]} agendado na tarefa {task_id}")
    return ExperimentAccepted(task_id=task_id, status=TaskStatus.PENDING.value, config_hash=config_hash)


@router.get("/tasks/{task_id}", status_code=status.HTTP_200_OK)
async def get_task(task_id: str) -> Dict[str, Any]:
    """
    Consulta o estado de uma execução em segundo plano.

    Raises:
        HTTPException: 404 se a tarefa não existir
    """
    info = task_manager.get_task(task_id)
    if info is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Tarefa não encontrada: {task_id}")
    return info.to_dict()


@router.get("/{run_id}", response_model=ReportResponse, status_code=status.HTTP_200_OK)
async def get_report(
    run_id: str,
    use_case: GetReportUseCase = Depends(get_get_report_use_case),
) -> ReportResponse:
    """
    Recupera o relatório de uma execução.

    Raises:
        HTTPException: 422 para run_id malformado, 404 se não existir, 500 em erro interno
    """
    try:
        result = use_case.execute(run_id)
    except ConfigInvalid as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except RepositoryError as e:
        logger.error(f"Erro no repositório: {e}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail="Erro interno na consulta do relatório",
        )
    except Exception as e:
        logger.error(f"Erro inesperado: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail="Erro interno do servidor")

    if not result:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Relatório não encontrado: {run_id}")
    return result
