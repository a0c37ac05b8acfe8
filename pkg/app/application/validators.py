"""
Validadores de configuração de experimentos.
"""
import logging
from pathlib import Path
from typing import Dict, Optional

from app.application.dtos import ExperimentConfig
from app.application.scenarios import scenario_names
from app.core.exceptions import ConfigInvalid
from app.core.settings import settings

logger = logging.getLogger(__name__)

# Parâmetros aceitos por domínio da galeria
DOMAIN_PARAMS: Dict[str, set] = {
    "analytic-ball": {"radius"},
    "graph-bump": {"h", "w", "L", "z0", "cap"},
    "flat-slab": {"height", "L"},
}

RUN_ID_CHARS = set("0123456789abcdef")


class ConfigValidator:
    """Validações que o esquema pydantic não expressa."""

    @staticmethod
    def validate_domain_params(config: ExperimentConfig) -> None:
        """
        Rejeita parâmetros desconhecidos ou não positivos.

        Raises:
            ConfigInvalid: Se algum parâmetro for inválido
        """
        kind = config.domain.kind
        unknown = set(config.domain.params) - DOMAIN_PARAMS[kind]
        if unknown:
            raise ConfigInvalid(f"Parâmetros desconhecidos para {kind}: {sorted(unknown)}")
        for key, value in config.domain.params.items():
            # a altura do bump pode ser zero (fundo plano)
            if value < 0 or (value == 0 and key != "h"):
                raise ConfigInvalid(f"Parâmetro {key} deve ser positivo (recebido {value})")

    @staticmethod
    def validate_scenario(name: str) -> str:
        """
        Valida o nome de um cenário de transporte.

        Raises:
            ConfigInvalid: Se o cenário não existir
        """
        if name not in scenario_names():
            raise ConfigInvalid(f"Cenário desconhecido: {name} (disponíveis: {', '.join(scenario_names())})")
        return name

    @staticmethod
    def safe_output_dir(name: Optional[str], root: Optional[str] = None) -> Path:
        """
        Resolve um diretório de saída dentro de `root`.

        Args:
            name: Subdiretório relativo pedido (None usa a própria raiz)
            root: Raiz permitida (padrão: settings.output_dir)

        Raises:
            ConfigInvalid: Se o caminho escapar da raiz
        """
        base = Path(root or settings.output_dir).resolve()
        if not name:
            return base
        target = (base / name).resolve()
        if target != base and base not in target.parents:
            raise ConfigInvalid("Diretório de saída fora da raiz permitida")
        return target

    @staticmethod
    def validate_run_id(run_id: str) -> str:
        """
        Valida um identificador de execução (hexadecimal minúsculo).

        Raises:
            ConfigInvalid: Se o identificador for inválido
        """
        sanitized = (run_id or "").strip()
        if not sanitized or len(sanitized) > 64 or not set(sanitized) <= RUN_ID_CHARS:
            raise ConfigInvalid(f"run_id inválido: {run_id!r}")
        return sanitized

    @classmethod
    def validate(cls, config: ExperimentConfig) -> ExperimentConfig:
        """Executa todas as validações e devolve a própria configuração."""
        cls.validate_domain_params(config)
        cls.validate_scenario(config.transport.scenario)
        logger.debug(f"Configuração {config.config_hash()[:12]} validada")
        return config
