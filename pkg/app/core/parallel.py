"""
Execução paralela de blocos de amostras.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

from app.core.rng import Chunk, chunks
from app.core.settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


def map_chunks(
    fn: Callable[[Chunk], T],
    n: int,
    seed: int,
    name: str,
    threads: int | None = None,
    chunk_size: int | None = None,
) -> List[T]:
    """
    Aplica `fn` a cada bloco e devolve os resultados na ordem dos blocos.

    Args:
        fn: Função pura de um bloco
        n: Total de amostras
        seed: Semente da execução
        name: Namespace da verificação
        threads: Número de workers (padrão: settings.threads)
        chunk_size: Tamanho do bloco (padrão: settings.rng_chunk)

    Returns:
        Lista de resultados, um por bloco
    """
    work = list(chunks(n, seed, name, chunk_size))
    workers = max(1, int(threads or settings.threads))
    if workers == 1 or len(work) <= 1:
        return [fn(c) for c in work]
    logger.debug(f"{name}: {len(work)} blocos em {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
