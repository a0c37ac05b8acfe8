"""
Configuração de logging da aplicação.
"""
import logging
import sys
from typing import TextIO

from app.core.settings import settings


def setup_logging(level: str | None = None, stream: TextIO | None = None) -> None:
    """
    Configura o sistema de logging da aplicação.

    Args:
        level: Nível opcional que substitui settings.log_level
        stream: Destino dos registros (padrão: stdout; a CLI usa stderr)
    """
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    level_name = (level or settings.log_level).upper()
    log_level = getattr(logging, level_name, logging.INFO)

    logging.basicConfig(
        level=log_level,
        format=log_format,
        handlers=[
            logging.StreamHandler(stream or sys.stdout)
        ]
    )

    # Reduzir verbosidade de bibliotecas
    loggers_config = {
        "httpx": logging.WARNING,
        "urllib3": logging.WARNING,
        "sqlalchemy.engine": logging.WARNING,
        "uvicorn.access": logging.WARNING,
    }

    for logger_name, lvl in loggers_config.items():
        logging.getLogger(logger_name).setLevel(lvl)

    logger = logging.getLogger(__name__)
    logger.info(f"Sistema de logging configurado. Nível: {level_name}")

