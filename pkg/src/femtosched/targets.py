"""Target throughput LP over MIS rate vectors and the threshold sweep."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph import InterferenceGraph, candidate_thresholds, build_graph
from .lp import linprog_max
from .mis import MisSet, compute_mis_set, mis_power_profiles
from .network import (ChannelMatrix, NetworkScenario, PerformanceCriterion,
                      batch_throughput, build_channel, max_rates)

SIMPLEX_TOL = 1e-9
REPORT_TOL = 1e-6


class InfeasibleError(RuntimeError):
    pass


@dataclass
class TargetSolution:
    status: str  # "optimal" | "infeasible"
    y_star: Optional[np.ndarray]
    alpha_star: Optional[np.ndarray]
    objective: Optional[float]
    threshold: Optional[float] = None
    mode: Optional[str] = None
    infeasibility: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def rate_matrix(mis_set: MisSet, channel: ChannelMatrix, p_max) -> np.ndarray:
    """``R[i, j]``: rate of UE ``i`` when set ``j`` transmits at full power."""
    profiles = mis_power_profiles(mis_set, p_max)
    R = batch_throughput(profiles, channel).T
    R[profiles.T == 0] = 0.0
    return R


def solve_targets(R, r_min, criterion: PerformanceCriterion) -> TargetSolution:
    """Best convex combination of the columns of ``R`` meeting the rate floors.

    Weighted sum is solved directly; max-min through the epigraph variable
    ``t`` with ``y_i >= t``. The returned ``y_star`` is recomputed from
    ``alpha_star`` rather than read off the solver.
    """
    R = np.asarray(R, dtype=float)
    n, s = R.shape
    r_min = np.broadcast_to(np.asarray(r_min, dtype=float), (n,))
    if criterion.kind == "weighted_sum":
        w = criterion.weight_vector(n)
        res = linprog_max(w @ R, A_ub=-R, b_ub=-r_min, A_eq=np.ones((1, s)), b_eq=[1.0])
    else:
        A_ub = np.vstack([np.hstack([-R, np.ones((n, 1))]), np.hstack([-R, np.zeros((n, 1))])])
        b_ub = np.concatenate([np.zeros(n), -r_min])
        A_eq = np.hstack([np.ones((1, s)), np.zeros((1, 1))])
        c = np.zeros(s + 1)
        c[-1] = 1.0
        res = linprog_max(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
    if res.status != "optimal":
        return TargetSolution("infeasible", None, None, None, infeasibility=res.infeasibility)
    alpha = np.clip(res.x[:s], 0.0, None)
    alpha /= alpha.sum()
    y = R @ alpha
    if np.any(y < r_min - REPORT_TOL):
        raise AssertionError("simplex returned a point violating the rate floors")
    return TargetSolution("optimal", y, alpha, float(criterion.evaluate(y)))


def min_discount(mis_set: MisSet) -> float:
    """Smallest discount factor for which every hull point is reachable."""
    if mis_set.mode == "exact":
        return 1.0 - 1.0 / len(mis_set)
    return 1.0 - 1.0 / (mis_set.coloring_size + 1)


@dataclass
class SweepRow:
    threshold: float
    edge_count: int
    n_sets: int
    feasible: bool
    objective: Optional[float]
    # best criterion value ignoring the rate floors, for reporting only
    relaxed_objective: float
    min_discount: float
    discount_ok: bool


@dataclass
class SweepResult:
    threshold: float
    graph: InterferenceGraph
    mis_set: MisSet
    solution: TargetSolution
    rate_matrix: np.ndarray
    table: list[SweepRow] = field(default_factory=list)

    def table_csv(self) -> str:
        lines = ["threshold,edge_count,n_sets,feasible,objective,relaxed_objective,min_discount,discount_ok"]
        for r in self.table:
            obj = "" if r.objective is None else f"{r.objective:.9g}"
            lines.append(f"{r.threshold:.9g},{r.edge_count},{r.n_sets},{int(r.feasible)},{obj},"
                         f"{r.relaxed_objective:.9g},{r.min_discount:.9g},{int(r.discount_ok)}")
        return "\n".join(lines) + "\n"


def evaluate_graph(graph: InterferenceGraph, scenario: NetworkScenario, channel: ChannelMatrix,
                   mode: str, criterion: PerformanceCriterion):
    weights = max_rates(channel, scenario.p_max)
    mis_set = compute_mis_set(graph, mode, weights)
    R = rate_matrix(mis_set, channel, scenario.p_max)
    sol = solve_targets(R, scenario.r_min, criterion)
    sol.threshold = graph.threshold_d if isinstance(graph.threshold_d, float) else None
    sol.mode = mode
    return mis_set, R, sol


def select_optimal_threshold(scenario: NetworkScenario, mode: str = "exact",
                             channel: Optional[ChannelMatrix] = None,
                             criterion: Optional[PerformanceCriterion] = None,
                             enforce_discount: bool = False) -> SweepResult:
    """Run the per-graph pipeline for every candidate threshold and keep the best.

    Infeasible graphs are skipped; with ``enforce_discount`` so are graphs whose
    minimum discount factor exceeds the scenario's. Ties go to the smaller
    threshold.
    """
    channel = build_channel(scenario) if channel is None else channel
    criterion = scenario.criterion if criterion is None else criterion
    zero = np.zeros(scenario.n)
    best: Optional[SweepResult] = None
    table = []
    for d in candidate_thresholds(scenario):
        graph = build_graph(scenario, d)
        mis_set, R, sol = evaluate_graph(graph, scenario, channel, mode, criterion)
        relaxed = solve_targets(R, zero, criterion).objective
        dbar = min_discount(mis_set)
        ok = scenario.delta >= dbar - 1e-12
        table.append(SweepRow(d, graph.edge_count(), len(mis_set), sol.feasible,
                              sol.objective, relaxed, dbar, ok))
        if not sol.feasible or (enforce_discount and not ok):
            continue
        if best is None or sol.objective > best.solution.objective + SIMPLEX_TOL:
            best = SweepResult(d, graph, mis_set, sol, R)
    if best is None:
        raise InfeasibleError("no candidate interference graph admits a feasible target")
    best.table = table
    return best
