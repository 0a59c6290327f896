import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pgraph import WeightedGraph, random_graph

settings.register_profile(
    "pgraph",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pgraph")

P_SOLVER = [1.5, 2.0, 3.0]
P_IDENTITY = [1.3, 2.0, 3.5]


@st.composite
def graphs(draw, min_n=2, max_n=12, potential=False):
    """Connected random weighted graph, reproducible from a drawn seed."""
    seed = draw(st.integers(0, 2 ** 32 - 1))
    n = draw(st.integers(min_n, max_n))
    return random_graph(np.random.default_rng(seed), n, potential=potential)


def path_graph(n: int, b=1.0, m=1.0) -> WeightedGraph:
    """Path ``0 - 1 - ... - n`` with constant or per-edge weights."""
    bs = [b] * n if np.isscalar(b) else list(b)
    return WeightedGraph.build([(k, k + 1, bs[k]) for k in range(n)], m={k: m for k in range(n + 1)})


@pytest.fixture
def path5():
    return path_graph(5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
