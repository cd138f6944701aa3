"""Dense two-phase tableau simplex with Bland's rule.

Solves ``max c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``x >= 0``. Problem sizes here are at most a few hundred rows and
columns, so a dense tableau is adequate and keeps the solver auditable.
The tableau is rebuilt from the original data every ``REINVERT_EVERY``
pivots so rounding error cannot accumulate along long pivot sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
REINVERT_EVERY = 20
# smallest entry accepted when pivoting an artificial out; below it the row is redundant
DRIVE_OUT_TOL = 1e-7


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]
    # optimal phase-one value: total artificial mass left over. Positive
    # means no point satisfies the constraints.
    infeasibility: float = 0.0
    pivots: int = 0


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _rebuild(M: np.ndarray, b: np.ndarray, cost: np.ndarray, basis: list[int]) -> np.ndarray:
    """Tableau ``[B^-1 M | B^-1 b]`` with reduced-cost row ``c_B B^-1 M - c``."""
    m, ncols = M.shape
    T = np.zeros((m + 1, ncols + 1))
    B = M[:, basis]
    T[:m, :ncols] = np.linalg.solve(B, M)
    T[:m, -1] = np.linalg.solve(B, b)
    cb = cost[basis]
    T[-1, :ncols] = cb @ T[:m, :ncols] - cost
    T[-1, -1] = cb @ T[:m, -1]
    # basic columns are unit vectors by construction; clean the noise
    for i, j in enumerate(basis):
        T[:m, j] = 0.0
        T[i, j] = 1.0
        T[-1, j] = 0.0
    return T


def _run(M, b, cost, basis: list[int], max_pivots: int):
    """Primal simplex from a feasible basis; returns (status, tableau, pivots)."""
    m, ncols = M.shape
    T = _rebuild(M, b, cost, basis)
    pivots = 0
    while True:
        z = T[-1, :ncols]
        entering = np.flatnonzero(z < -FEAS_TOL * 1e-1)
        if entering.size == 0:
            return "optimal", T, pivots
        col = int(entering[0])  # Bland: lowest index
        column = T[:m, col]
        pos = column > PIVOT_TOL * max(1.0, float(np.abs(column).max(initial=0.0)))
        if not pos.any():
            return "unbounded", T, pivots
        ratios = np.full(m, np.inf)
        ratios[pos] = np.clip(T[:m, -1][pos], 0.0, None) / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))  # Bland: lowest leaving index
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
        if pivots % REINVERT_EVERY == 0:
            T = _rebuild(M, b, cost, basis)
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit exceeded")


def basis_cols(basis: list[int], limit: int) -> list[int]:
    return [j for j in basis if j < limit]


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                max_pivots: int = 100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    nvar = c.shape[0]
    A_ub = np.zeros((0, nvar)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nvar)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    nstd = nvar + m_ub

    # columns: originals | slacks | artificials
    A = np.zeros((m, nstd))
    A[:m_ub, :nvar] = A_ub
    A[:m_ub, nvar:] = np.eye(m_ub)
    A[m_ub:, :nvar] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    needs_art = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(needs_art)
    basis = [nvar + i if i < m_ub else -1 for i in range(m)]
    M = np.hstack([A, np.zeros((m, n_art))])
    for k, i in enumerate(needs_art):
        M[i, nstd + k] = 1.0
        basis[i] = nstd + k

    total = 0
    rows = list(range(m))
    if n_art:
        # phase one: maximise -(sum of artificials)
        cost1 = np.zeros(nstd + n_art)
        cost1[nstd:] = -1.0
        _, T, piv = _run(M, b, cost1, basis, max_pivots)
        total += piv
        residual = -T[-1, -1]
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if residual > FEAS_TOL * scale:
            return LPResult("infeasible", None, None, infeasibility=float(residual), pivots=total)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= nstd:
                row = np.abs(T[i, :nstd])
                row[basis_cols(basis, nstd)] = 0.0
                j = int(np.argmax(row)) if row.size else 0
                if row.size and row[j] > DRIVE_OUT_TOL:
                    _pivot(T, i, j)
                    basis[i] = j
                    keep.append(i)
            else:
                keep.append(i)
        basis = [basis[i] for i in keep]
        rows = keep

    if not rows:
        x = np.zeros(nvar)
        if np.any(c > FEAS_TOL * 1e-1):
            return LPResult("unbounded", None, None, pivots=total)
        return LPResult("optimal", x, 0.0, pivots=total)
    cost = np.zeros(nstd)
    cost[:nvar] = c
    status, T, piv = _run(A[rows], b[rows], cost, basis, max_pivots)
    total += piv
    if status == "unbounded":
        return LPResult("unbounded", None, None, pivots=total)
    x = np.zeros(nstd)
    x[basis] = np.clip(T[:-1, -1], 0.0, None)
    x = x[:nvar]
    return LPResult("optimal", x, float(c @ x), pivots=total)
