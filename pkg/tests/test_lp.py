from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from femtosched.lp import linprog_max


def test_small_known():
    # max x + y, x + 2y <= 4, 3x + y <= 6
    res = linprog_max([1, 1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.8)
    assert np.allclose(res.x, [1.6, 1.2])


def test_infeasible_and_unbounded():
    res = linprog_max([1.0], A_ub=[[1.0]], b_ub=[1.0], A_eq=[[1.0]], b_eq=[2.0])
    assert res.status == "infeasible" and res.infeasibility > 0
    assert linprog_max([1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0]).status == "unbounded"


def test_redundant_equalities():
    res = linprog_max([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    assert res.status == "optimal" and res.objective == pytest.approx(2.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_against_scipy(n, m, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    Aeq = np.ones((1, n))
    beq = [1.0]
    ours = linprog_max(c, A, b, Aeq, beq)
    ref = linprog(-c, A_ub=A, b_ub=b, A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * n,
                  method="highs")
    if ref.status == 2:
        assert ours.status == "infeasible"
    else:
        assert ours.status == "optimal"
        assert ours.objective == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(A @ ours.x <= b + 1e-8)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 30), st.integers(2, 20), st.integers(0, 2**31 - 1))
def test_near_duplicate_columns(n, m, seed):
    # rate matrices often have almost identical columns and many zeros
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 5, m) * (rng.random(m) < 0.4)
    R = base[:, None] + 1e-3 * rng.normal(size=(m, n)) * (base[:, None] > 0)
    R = np.clip(R, 0, None)
    floor = np.full(m, 0.01)
    ours = linprog_max(R.mean(axis=0), A_ub=-R, b_ub=-floor, A_eq=np.ones((1, n)), b_eq=[1.0])
    ref = linprog(-R.mean(axis=0), A_ub=-R, b_ub=-floor, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if ref.status == 2:
        assert ours.status == "infeasible"
    elif ref.status == 0:
        assert ours.status == "optimal"
        assert ours.objective == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(R @ ours.x >= floor - 1e-8)
