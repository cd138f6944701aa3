from __future__ import annotations

import numpy as np
import pytest

from femtosched.graph import InterferenceGraph, build_graph
from femtosched.network import build_channel
from femtosched.scenarios import pentagon, three_floor


@pytest.fixture
def pent():
    sc = pentagon()
    return sc, build_channel(sc), build_graph(sc, 1.2)


@pytest.fixture
def floors():
    sc = three_floor()
    return sc, build_channel(sc)


@pytest.fixture
def chain3():
    return InterferenceGraph.from_edges(3, [(0, 1), (1, 2)])


def random_graph(rng: np.random.Generator, n: int, p: float) -> InterferenceGraph:
    upper = np.triu(rng.random((n, n)) < p, 1)
    return InterferenceGraph(upper | upper.T)
