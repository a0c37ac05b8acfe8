"""
Testes para os fluxos aleatórios e a execução em blocos.
"""
import numpy as np

from app.core.parallel import map_chunks
from app.core.rng import chunks, name_key, stream


class TestStreams:
    """Testes para stream e chunks."""

    def test_same_namespace_same_numbers(self):
        assert np.array_equal(stream(1, "a").random(8), stream(1, "a").random(8))

    def test_namespaces_are_independent(self):
        """Nome, semente e bloco mudam o fluxo."""
        base = stream(1, "a").random(4)

        assert not np.array_equal(base, stream(1, "b").random(4))
        assert not np.array_equal(base, stream(2, "a").random(4))
        assert not np.array_equal(base, stream(1, "a", 1).random(4))

    def test_name_key_is_stable(self):
        assert name_key("cover") == name_key("cover")
        assert name_key("cover") != name_key("cutoff")

    def test_chunks_cover_range(self):
        """Blocos contíguos com o último parcial."""
        blocks = list(chunks(10, 0, "x", chunk_size=4))

        assert [(c.start, c.size) for c in blocks] == [(0, 4), (4, 4), (8, 2)]
        assert [c.index for c in blocks] == [0, 1, 2]


class TestMapChunks:
    """Testes para map_chunks."""

    def test_independent_of_workers(self):
        """O resultado não depende do número de workers."""
        def draw(chunk):
            return chunk.rng.random(chunk.size)

        serial = np.concatenate(map_chunks(draw, 1000, 3, "draw", threads=1, chunk_size=64))
        threaded = np.concatenate(map_chunks(draw, 1000, 3, "draw", threads=4, chunk_size=64))

        assert len(serial) == 1000
        assert np.array_equal(serial, threaded)

    def test_order_is_preserved(self):
        assert map_chunks(lambda c: c.index, 10, 0, "idx", threads=3, chunk_size=3) == [0, 1, 2, 3]
