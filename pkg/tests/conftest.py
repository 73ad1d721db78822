import numpy as np
import pytest

from hrgraph.skeleton import from_adjacency, single_vertex


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def sv222():
    return single_vertex((2, 2, 2))


@pytest.fixture
def two_vertex_k3():
    # color 1 swaps the vertices, color 2 is complete, color 3 one loop each
    return from_adjacency([
        [[0, 1], [1, 0]],
        [[1, 1], [1, 1]],
        [[1, 0], [0, 1]],
    ], vertices=["u", "v"])


@pytest.fixture
def two_vertex_k2():
    return from_adjacency([[[1, 1], [1, 1]], [[1, 1], [1, 1]]], vertices=["u", "v"])
