from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from femtosched.graph import InterferenceGraph, build_graph
from femtosched.mis import enumerate_all_mis
from femtosched.network import (ChannelMatrix, NetworkScenario, CellGeometry,
                                PerformanceCriterion, build_channel, max_rates)
from femtosched.scenarios import grid3x3_fading, rooms12, three_floor
from femtosched.scheduler import (CyclicSchedule, SchedulerState, UnsafeDiscountWarning,
                                  coloring_tdma_bound, constant_power_infeasible,
                                  constant_power_search, convergence_horizon,
                                  count_nontrivial, cyclic_values, empirical_weights,
                                  iter_nontrivial, run_cyclic, run_fading_experiment,
                                  run_proposed, sample_nontrivial, schedule_indices,
                                  search_cyclic, step, target_residuals, theta_bound)
from femtosched.targets import TargetSolution, evaluate_graph, rate_matrix, solve_targets


@pytest.fixture
def pent_solution(pent):
    sc, ch, g = pent
    ms, R, sol = evaluate_graph(g, sc, ch, "exact", sc.criterion)
    return sc, ch, g, ms, R, sol


def test_step_examples():
    r, s = step(SchedulerState(np.full(5, 0.2), 0.8))
    assert r == 0 and np.allclose(s.alpha, [0, 0.25, 0.25, 0.25, 0.25])
    s = SchedulerState(np.array([1.0, 0, 0, 0, 0]), 0.8)
    for _ in range(20):
        r, s = step(s)
        assert r == 0
    assert np.allclose(s.alpha, [1, 0, 0, 0, 0])
    s = SchedulerState(np.array([0.5, 0.5]), 0.5)
    picks = []
    for _ in range(6):
        r, s = step(s)
        picks.append(r)
    # (1-d) r0 + d r1 already equals the target, so set 1 is repeated forever
    assert picks == [0, 1, 1, 1, 1, 1]
    assert np.allclose(s.alpha, [0, 1])


def test_convergence_horizon():
    assert convergence_horizon(3.0, 3.0, 0.5) == 0
    assert convergence_horizon(1e-3, 4 * math.sqrt(5), 0.8) == 40
    with pytest.raises(ValueError):
        convergence_horizon(1e-3, 1.0, 1.0)


def test_pentagon_proposed(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    tr = run_proposed(sol, ms, sc, ch, horizon=200)
    assert np.allclose(tr.discounted, 1.6, atol=1e-3)
    assert tr.decentralized_consistent
    assert tr.violation_slot is None
    # rates recomputable from the recorded profiles
    from femtosched.network import throughput_vector
    for t in (0, 17, 199):
        assert np.allclose(tr.rates[t], throughput_vector(tr.profiles[t], ch))


def test_default_horizon(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    tr = run_proposed(sol, ms, sc, ch)
    assert tr.horizon == convergence_horizon(1e-3, theta_bound(R), 0.8) + 1 == 39
    assert np.max(np.abs(tr.discounted - sol.y_star)) <= 1e-3


def test_single_set_policy():
    sc = three_floor()
    ch = build_channel(sc)
    sc.r_min = np.zeros(3)
    g = InterferenceGraph.from_edges(3, [])
    ms, R, sol = evaluate_graph(g, sc, ch, "exact", sc.criterion)
    tr = run_proposed(sol, ms, sc, ch, horizon=60)
    assert np.allclose(tr.discounted, R[:, 0] * (1 - 0.9 ** 60))


def test_chain_policy(floors, chain3):
    sc, ch = floors
    ms, R, sol = evaluate_graph(chain3, sc, ch, "exact", sc.criterion)
    tr = run_proposed(sol, ms, sc, ch)
    assert tr.discounted[1] >= 1.2 - 1e-3


def test_residuals_and_empirical_weights(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    tr = run_proposed(sol, ms, sc, ch, horizon=120)
    res = target_residuals(tr, sol.y_star)
    bound = 0.8 ** (np.arange(120) + 1) * theta_bound(R)
    assert np.all(res <= bound + 1e-12)
    w = empirical_weights(tr.selected, len(ms), 0.8)
    assert np.allclose(w, sol.alpha_star, atol=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.floats(0, 0.999), st.integers(0, 2**31 - 1))
def test_simplex_preserved(s, extra, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.dirichlet(np.ones(s))
    dbar = 1 - 1 / s
    delta = max(dbar + extra * (1 - dbar), 1e-3) if s > 1 else max(extra, 1e-3)
    delta = min(delta, 0.999)
    idx, lowest, violation = schedule_indices(alpha, delta, 300)
    assert violation is None and lowest >= -1e-12


def test_unsafe_delta_detected(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    with pytest.warns(UnsafeDiscountWarning):
        tr = run_proposed(sol, ms, sc, ch, horizon=20, delta=0.79)
    assert tr.violation_slot == 0 and tr.min_alpha < 0


def test_cyclic_closed_form(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    cyc = CyclicSchedule((0, 1, 2, 3, 4))
    h = 5 * 40
    tr = run_cyclic(cyc, ms, sc, ch, h)
    closed = cyclic_values(np.array([cyc.cycle]), R.T, 0.8)[0]
    assert np.allclose(tr.discounted, closed * (1 - 0.8 ** h), atol=1e-12)
    assert cyc.covers_every_ue(ms, 5) and cyc.uses_every_set(5)


def test_cyclic_length_one_equals_concentrated(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    tr_c = run_cyclic(CyclicSchedule((2,)), ms, sc, ch, 50)
    alpha = np.zeros(5)
    alpha[2] = 1.0
    point = TargetSolution("optimal", R @ alpha, alpha, None)
    tr_p = run_proposed(point, ms, sc, ch, horizon=50)
    assert np.allclose(tr_c.discounted, tr_p.discounted)


def test_nontrivial_counts():
    assert count_nontrivial(5, 7) == 16800
    assert count_nontrivial(5, 5) == 120
    assert count_nontrivial(1, 1) == 1
    for s, L in ((2, 4), (3, 5), (4, 4)):
        seqs = list(iter_nontrivial(s, L))
        assert len(seqs) == count_nontrivial(s, L) == len(set(seqs))
        assert all(len(set(q)) == s for q in seqs)


def test_sampler_uniform():
    rng = np.random.default_rng(5)
    S = sample_nontrivial(3, 4, 36000, rng)
    assert all(len(set(row)) == 3 for row in S)
    _, counts = np.unique(S, axis=0, return_counts=True)
    assert len(counts) == count_nontrivial(3, 4) == 36
    assert counts.min() > 800 and counts.max() < 1200


def test_search_cyclic(pent_solution):
    sc, ch, g, ms, R, sol = pent_solution
    r5 = search_cyclic(ms, 5, sc, ch)
    assert r5.exhaustive and r5.n_candidates == 120
    assert r5.value == pytest.approx(1.3707758, abs=1e-6)
    with pytest.raises(ValueError):
        search_cyclic(ms, 7, sc, ch, budget=100)
    sampled = search_cyclic(ms, 7, sc, ch, budget=500, seed=3)
    assert not sampled.exhaustive and sampled.value <= 1.4898366 + 1e-9
    again = search_cyclic(ms, 7, sc, ch, budget=500, seed=3)
    assert again.schedule == sampled.schedule
    one = InterferenceGraph.from_edges(1, [])
    sc1 = NetworkScenario("one", [CellGeometry((0.0, 1.0), (0.0, 0.0))], 10.0, 1.0, 0.0, 0.5)
    res = search_cyclic(enumerate_all_mis(one), 1, sc1, build_channel(sc1))
    assert res.schedule.cycle == (0,) and res.n_candidates == 1


def test_constant_power_pentagon(pent):
    sc, ch, _ = pent
    res = constant_power_search(sc, ch)
    assert res.exhaustive and res.value == pytest.approx(math.log2(47 / 17))
    assert np.allclose(res.profile, 30)


def test_constant_power_zero_profile():
    sc = three_floor()
    ch = build_channel(sc)
    grid = [np.array([0.0])] * 3
    sc.power_grid = None
    assert not constant_power_search(sc, ch, grid=grid, certify=False).feasible
    sc.r_min = np.zeros(3)
    res = constant_power_search(sc, ch, grid=grid, certify=False)
    assert res.feasible and res.value == 0.0


def test_constant_power_heuristic_flag(pent):
    sc, ch, _ = pent
    res = constant_power_search(sc, ch, cap=10)
    assert not res.exhaustive
    assert res.value == pytest.approx(math.log2(47 / 17))


def test_constant_power_certificate_matches_scipy():
    for P, expect in ((5, False), (15, True)):
        sc = rooms12(P=P)
        ch = build_channel(sc)
        assert constant_power_infeasible(sc, ch) is expect
        c = 2.0 ** sc.r_min - 1
        A = c[:, None] * ch.gain.T
        A[np.diag_indices(sc.n)] = -ch.direct
        ref = linprog(np.zeros(sc.n), A_ub=A, b_ub=-c * ch.noise,
                      bounds=[(0, p) for p in sc.p_max], method="highs")
        assert (ref.status == 2) is expect


def test_coloring_bound(pent):
    sc, ch, g = pent
    assert coloring_tdma_bound(g, sc, ch).objective == pytest.approx(4 / 3)
    empty = InterferenceGraph.from_edges(5, [])
    full = solve_targets(rate_matrix(enumerate_all_mis(empty), ch, sc.p_max), sc.r_min,
                         sc.criterion)
    assert coloring_tdma_bound(empty, sc, ch).objective == pytest.approx(full.objective)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.floats(0.2, 0.7), st.integers(0, 2**31 - 1))
def test_coloring_bound_below_mis_bound(n, p, seed):
    from conftest import random_graph
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p)
    gain = rng.random((n, n)) * 0.3 * g.adjacency
    np.fill_diagonal(gain, 1.0)
    cells = [CellGeometry((float(i), 1.0), (float(i), 0.0)) for i in range(n)]
    sc = NetworkScenario("r", cells, 10.0, 1.0, 0.0, 0.9, explicit_gain=gain,
                         criterion=PerformanceCriterion("max_min"))
    ch = build_channel(sc)
    col = coloring_tdma_bound(g, sc, ch)
    mis = solve_targets(rate_matrix(enumerate_all_mis(g), ch, sc.p_max), sc.r_min, sc.criterion)
    assert col.objective <= mis.objective + 1e-9


def test_fading_experiment_properties():
    sc = grid3x3_fading()
    a = run_fading_experiment(sc, 0.5, 10, 95, seed=11)
    b = run_fading_experiment(sc, 0.5, 10, 95, seed=11)
    assert np.array_equal(a.fixed_values, b.fixed_values)
    assert a.block_slots.tolist() == [10] * 9 + [5]
    assert np.all(a.reselect_values >= a.fixed_values - 1e-9)
    same = np.isclose(a.reselect_thresholds, a.fixed_threshold)
    assert np.allclose(a.fixed_values[same], a.reselect_values[same])
    assert a.loss >= 0
    with pytest.raises(ValueError):
        run_fading_experiment(sc, 0.5, 0, 10)
