from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from femtosched.graph import InterferenceGraph
from femtosched.network import (CellGeometry, ChannelMatrix, DegenerateGeometryError,
                                NetworkScenario, PerformanceCriterion, apply_fading,
                                batch_throughput, build_channel, discounted_throughput,
                                neighbor_only_throughput, profile_grid, sinr, sinr_vector,
                                throughput, throughput_vector)
from femtosched.scenarios import grid3x3, single_cell


def test_grid_direct_gain():
    ch = build_channel(grid3x3())
    assert np.allclose(ch.direct, 1 / 3.16 ** 2)
    assert ch.direct[0] == pytest.approx(0.10014, abs=1e-4)


def test_three_floor_explicit_gains(floors):
    _, ch = floors
    assert ch.gain[0, 0] == 0.5 and ch.gain[0, 1] == 0.25 and ch.gain[0, 2] == 0.0032


def test_single_cell_matrix():
    ch = build_channel(single_cell())
    assert ch.gain.shape == (1, 1)


def test_degenerate_geometry_rejected():
    sc = NetworkScenario("bad", [CellGeometry((0.0, 0.0), (0.0, 0.0))], 1.0, 1.0, 0.0, 0.5)
    with pytest.raises(DegenerateGeometryError):
        build_channel(sc)


def test_pentagon_sinr_and_rate(pent):
    sc, ch, _ = pent
    p = np.array([30, 0, 30, 0, 0.0])
    assert sinr(p, ch, 0) == pytest.approx(15.0)
    assert throughput(p, ch, 0) == 4.0


def test_zero_power_gives_zero():
    ch = ChannelMatrix(np.array([[1.0, 0.3], [0.2, 1.0]]), np.array([1.0, 1.0]))
    assert np.all(sinr_vector(np.zeros(2), ch) == 0)
    assert throughput_vector(np.array([0.0, 5.0]), ch)[0] == 0


def test_three_floor_rates(floors):
    _, ch = floors
    p = np.array([100.0, 0, 100.0])
    assert sinr(p, ch, 0) == pytest.approx(50 / 2.32)
    assert throughput(p, ch, 0) == pytest.approx(4.495, abs=1e-3)
    assert throughput(np.array([0, 100.0, 0]), ch, 1) == pytest.approx(math.log2(26))


def test_neighbor_only_rates(floors, chain3):
    _, ch = floors
    p = np.array([100.0, 0, 100.0])
    assert neighbor_only_throughput(p, ch, chain3, 0) == pytest.approx(math.log2(26))
    full = InterferenceGraph(~np.eye(3, dtype=bool))
    empty = InterferenceGraph(np.zeros((3, 3), dtype=bool))
    q = np.array([40.0, 70.0, 10.0])
    assert np.allclose([neighbor_only_throughput(q, ch, full, i) for i in range(3)],
                       throughput_vector(q, ch))
    solo = np.array([0, 100.0, 0])
    assert neighbor_only_throughput(solo, ch, empty, 1) == throughput(solo, ch, 1)


def test_discounted_constant_and_alternating():
    v, tail = discounted_throughput(np.full(50, 3.0), 0.8)
    assert v == pytest.approx(3 * (1 - 0.8 ** 50))
    assert tail == pytest.approx(0.8 ** 50 * 3)
    alt = np.array([4.0, 0.0] * 200)
    v, _ = discounted_throughput(alt, 0.8)
    assert v == pytest.approx(4 * 0.2 / 0.36, abs=1e-12)
    with pytest.raises(ValueError):
        discounted_throughput(np.zeros(0), 0.5)


def test_fading_guards_and_determinism(pent):
    _, ch, _ = pent
    with pytest.raises(ValueError):
        apply_fading(ch, 0.0, 1)
    a, b = apply_fading(ch, 0.5, 42), apply_fading(ch, 0.5, 42)
    assert np.array_equal(a.gain, b.gain)


def test_rayleigh_mean():
    beta = 0.7
    ch = ChannelMatrix(np.ones((1000, 1000)), np.ones(1000))
    m = apply_fading(ch, beta, 3).gain.mean()
    assert m == pytest.approx(beta * math.sqrt(math.pi / 2), rel=0.01)


def test_criterion():
    y = np.array([1.0, 2.0, 4.0])
    assert PerformanceCriterion("max_min").evaluate(y) == 1.0
    assert PerformanceCriterion.average().evaluate(y) == pytest.approx(7 / 3)
    with pytest.raises(ValueError):
        PerformanceCriterion("weighted_sum", (0.5, 0.6))


def test_scenario_validation():
    cell = CellGeometry((0.0, 1.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        NetworkScenario("x", [cell], 1.0, 1.0, 0.0, 0.5, power_grid=[np.array([0.5, 1.0])])
    with pytest.raises(ValueError):
        NetworkScenario("x", [cell], 1.0, 1.0, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_batch_matches_single(n, seed):
    rng = np.random.default_rng(seed)
    ch = ChannelMatrix(rng.random((n, n)) + 0.01, rng.random(n) + 0.1)
    P = rng.random((7, n)) * 10
    B = batch_throughput(P, ch)
    for k in range(7):
        assert np.allclose(B[k], throughput_vector(P[k], ch), rtol=1e-12)
        assert np.all(B[k] >= 0)


def test_profile_grid_size():
    g = profile_grid([np.array([0, 1.0]), np.array([0, 1, 2.0])])
    assert g.shape == (6, 2)
