"""
Fluxos aleatórios baseados em contador.

Cada verificação recebe um namespace derivado de (semente, nome da
verificação); a amostra i pertence sempre ao bloco i // chunk e cada bloco
tem o seu próprio gerador Philox. O resultado não depende do número de
workers que consomem os blocos.
"""
import hashlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from app.core.settings import settings


def name_key(name: str) -> int:
    """Hash estável (independente de PYTHONHASHSEED) de um nome de verificação."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, name: str, chunk: int = 0) -> np.random.Generator:
    """
    Retorna o gerador do bloco `chunk` no namespace (seed, name).

    Args:
        seed: Semente da execução
        name: Nome da verificação
        chunk: Índice do bloco

    Returns:
        Gerador numpy sobre Philox
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(name_key(name), int(chunk)))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class Chunk:
    """Bloco de amostras [start, start + size) com o seu gerador."""
    index: int
    start: int
    size: int
    seed: int
    name: str

    @property
    def rng(self) -> np.random.Generator:
        return stream(self.seed, self.name, self.index)


def chunks(n: int, seed: int, name: str, chunk_size: int | None = None) -> Iterator[Chunk]:
    """Divide n amostras em blocos de tamanho fixo."""
    size = int(chunk_size or settings.rng_chunk)
    for index, start in enumerate(range(0, int(n), size)):
        yield Chunk(index=index, start=start, size=min(size, int(n) - start), seed=int(seed), name=name)
