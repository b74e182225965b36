import numpy as np
import pytest

from embcat.embio import EmbeddingTable


def make_table(name, words, vectors) -> EmbeddingTable:
    return EmbeddingTable(name, tuple(words), np.asarray(vectors, dtype=np.float32))


def random_table(rng, name="t", n=None, dim=None) -> EmbeddingTable:
    """Gaussian random table with distinct single-word tokens."""
    n = int(rng.integers(3, 40)) if n is None else n
    dim = int(rng.integers(2, 16)) if dim is None else dim
    words = tuple(f"w{i:04d}" for i in range(n))
    vecs = rng.standard_normal((n, dim)).astype(np.float32)
    return EmbeddingTable(name, words, vecs)


@pytest.fixture
def toy_table():
    # the 3-token table used in the nearest-neighbor contract examples
    return make_table("toy", ["a", "b", "c"], [[1, 0, 0], [0, 1, 0], [1, 1, 0]])
