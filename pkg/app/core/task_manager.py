"""
Execuções da suíte em segundo plano, consultadas pelo task_id.

O progresso chega da thread de trabalho através de progress_callback,
por isso toda mutação passa pelo lock do gerenciador.
"""
import asyncio
import logging
import threading
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Dict, Optional

logger = logging.getLogger(__name__)


def _now() -> datetime:
    return datetime.now(timezone.utc)


class TaskStatus(str, Enum):
    """Status das tarefas."""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"

    @property
    def finished(self) -> bool:
        return self in (TaskStatus.COMPLETED, TaskStatus.FAILED)


@dataclass
class TaskInfo:
    """Estado de uma execução: progresso da suíte, run_id ao final ou o erro."""
    task_id: str
    task_type: str
    config_hash: Optional[str] = None
    status: TaskStatus = TaskStatus.PENDING
    progress: int = 0
    message: str = "Tarefa criada"
    run_id: Optional[str] = None
    result: Optional[Any] = None
    error: Optional[str] = None
    error_type: Optional[str] = None
    created_at: datetime = field(default_factory=_now)
    updated_at: datetime = field(default_factory=_now)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["status"] = self.status.value
        data["created_at"] = self.created_at.isoformat()
        data["updated_at"] = self.updated_at.isoformat()
        return data


class TaskManager:
    """Registro em memória das execuções disparadas pela API."""

    def __init__(self, cleanup_interval: float = 3600.0):
        self.tasks: Dict[str, TaskInfo] = {}
        self.cleanup_interval = cleanup_interval
        self._lock = threading.Lock()

    def create_task(self, task_type: str, config_hash: Optional[str] = None) -> str:
        task_id = uuid.uuid4().hex
        with self._lock:
            self.tasks[task_id] = TaskInfo(task_id, task_type, config_hash)
        logger.info(f"Tarefa criada: {task_id} ({task_type})")
        return task_id

    def get_task(self, task_id: str) -> Optional[TaskInfo]:
        return self.tasks.get(task_id)

    def _set(self, task_id: str, **changes: Any) -> None:
        with self._lock:
            info = self.tasks.get(task_id)
            if info is None:
                return
            for key, value in changes.items():
                setattr(info, key, value)
            info.updated_at = _now()

    def progress_callback(self, task_id: str) -> Callable[[int, str], None]:
        """Callback (percentual, mensagem) da suíte; o percentual fica em [0, 100]."""
        def report(progress: int, message: str) -> None:
            self._set(task_id, progress=max(0, min(100, int(progress))), message=message)
        return report

    def complete_task(self, task_id: str, result: Any) -> None:
        run_id = result.get("run_id") if isinstance(result, dict) else None
        self._set(task_id, status=TaskStatus.COMPLETED, progress=100, message="Tarefa concluída",
                  result=result, run_id=run_id)
        logger.info(f"Tarefa concluída: {task_id}" + (f" (run {run_id})" if run_id else ""))

    def fail_task(self, task_id: str, error: Exception) -> None:
        self._set(task_id, status=TaskStatus.FAILED, message="Tarefa falhou",
                  error=str(error), error_type=type(error).__name__)
        logger.error(f"Tarefa falhada: {task_id} - {type(error).__name__}: {error}")

    def cleanup_old_tasks(self) -> int:
        """Remove tarefas encerradas há mais de cleanup_interval segundos; devolve quantas saíram."""
        now = _now()
        with self._lock:
            stale = [
                task_id for task_id, info in self.tasks.items()
                if info.status.finished and (now - info.updated_at).total_seconds() > self.cleanup_interval
            ]
            for task_id in stale:
                del self.tasks[task_id]
        if stale:
            logger.info(f"{len(stale)} tarefa(s) removida(s) por idade")
        return len(stale)

    async def run_task(self, task_id: str, fn: Callable[..., Any], *args, **kwargs) -> Any:
        """
        Roda fn numa thread e registra o desfecho na tarefa.

        Exceções ficam na tarefa (status failed, error_type) e não se propagam.
        """
        self._set(task_id, status=TaskStatus.PROCESSING, message="Processando...")
        try:
            result = await asyncio.to_thread(fn, *args, **kwargs)
        except Exception as e:
            self.fail_task(task_id, e)
            return None
        self.complete_task(task_id, result)
        return result


task_manager = TaskManager()
