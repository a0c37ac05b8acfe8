"""
Interfaces do domínio para abstrair formas, cartas e persistência.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np


class IShape(ABC):
    """
    Superfície implícita F(x) = 0 que delimita Ω = {F < 0}.

    Todas as avaliações são vetorizadas sobre arrays (n, 3). F cresce para
    fora, então ∇F/|∇F| é a normal exterior na fronteira.
    """

    kind: str
    center: np.ndarray
    # falso quando a forma não tem pontos estritamente não convexos por construção
    has_nonconvex_points: bool = True

    @abstractmethod
    def phi(self, x: np.ndarray) -> np.ndarray:
        """
        Avalia F.

        Args:
            x: Pontos (n, 3)

        Returns:
            Valores (n,)
        """
        pass

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        """Gradiente ∇F, shape (n, 3)."""
        pass

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Hessiana ∇²F, shape (n, 3, 3)."""
        pass

    @property
    @abstractmethod
    def diam(self) -> float:
        """Limitante superior do diâmetro do domínio (ou da célula periódica)."""
        pass

    @abstractmethod
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Caixa (lo, hi) que contém Ω (uma célula de período quando periódico)."""
        pass

    @abstractmethod
    def chart_seeds(self, spacing: float) -> np.ndarray:
        """
        Pontos de fronteira aproximados para centros de cartas.

        Args:
            spacing: Espaçamento alvo entre sementes vizinhas

        Returns:
            Pontos (k, 3) próximos de ∂Ω
        """
        pass

    def wrap(self, d: np.ndarray) -> np.ndarray:
        """Reduz deslocamentos à imagem mínima (identidade fora de domínios periódicos)."""
        return d

    def periodic_shifts(self) -> np.ndarray:
        """Translações usadas para replicar centros de cartas em domínios periódicos."""
        return np.zeros((1, 3))

    def analytic_exit(self, x: np.ndarray, d: np.ndarray) -> Optional[np.ndarray]:
        """
        Comprimento exato até a saída ao longo da direção unitária d, se houver fórmula.

        Returns:
            Comprimentos (n,) com +inf para raios que nunca saem, ou None
        """
        return None


class IReportRepository(ABC):
    """Interface para repositório de relatórios de verificação."""

    @abstractmethod
    def persist_report(self, config_hash: str, payload: Dict[str, Any]) -> None:
        """
        Persiste um relatório de execução.

        Args:
            config_hash: Hash canônico de (configuração, semente)
            payload: Relatório serializável em JSON
        """
        pass

    @abstractmethod
    def get_by_hash(self, config_hash: str) -> Optional[Dict[str, Any]]:
        """
        Recupera um relatório pelo hash da configuração.

        Args:
            config_hash: Hash canônico de (configuração, semente)

        Returns:
            Relatório se encontrado, None caso contrário
        """
        pass

    @abstractmethod
    def get_by_run_id(self, run_id: str) -> Optional[Dict[str, Any]]:
        """
        Recupera um relatório pelo identificador da execução.

        Args:
            run_id: Identificador da execução

        Returns:
            Relatório se encontrado, None caso contrário
        """
        pass
