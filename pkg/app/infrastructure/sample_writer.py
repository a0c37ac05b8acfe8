"""
Escrita de relatórios JSON e despejos CSV de amostras.
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List

import numpy as np

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Converte arrays e escalares numpy; não finitos viram strings ("inf", "nan")."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


class ReportWriter:
    """Escreve relatórios e amostras num diretório de saída."""

    def __init__(self, output_dir: str):
        """
        Inicializa o escritor.

        Args:
            output_dir: Diretório de saída (criado se necessário)
        """
        self.output_dir = Path(output_dir)

    def _ensure(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        """Escreve JSON com chaves ordenadas e indentação fixa."""
        self._ensure()
        path = self.output_dir / name
        path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                        encoding="utf-8")
        logger.info(f"Relatório escrito em {path}")
        return path

    def write_csv(self, name: str, columns: List[str], rows: Iterable[Iterable[Any]]) -> Path:
        """Escreve CSV (RFC 4180, aspas mínimas) com cabeçalho."""
        self._ensure()
        path = self.output_dir / name
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        logger.info(f"Amostras escritas em {path}")
        return path
