"""Checkable premises and bounds: weak non-neighbour interference, SLI, ratios."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .graph import InterferenceGraph, max_degree
from .lp import linprog_max
from .mis import MisSet, compute_mis_set, mis_power_profiles
from .network import (ChannelMatrix, NetworkScenario, PerformanceCriterion,
                      batch_throughput, build_channel, max_rates, profile_grid, ue_bs_distances)
from .targets import TargetSolution, rate_matrix, solve_targets

SLI_BUDGET = 10**6
DOMINANCE_TOL = 1e-9


class HeterogeneousScenarioError(ValueError):
    """The competitive-ratio guarantee needs equal p_max, noise and rate floors."""


# --------------------------------------------------------------------------
# Weak non-neighbour interference
# --------------------------------------------------------------------------

@dataclass
class WniReport:
    int_max: np.ndarray
    sigma2: np.ndarray
    epsilon: float
    passes: np.ndarray
    epsilon_min: float

    @property
    def ok(self) -> bool:
        return bool(self.passes.all())

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "epsilon_min": self.epsilon_min, "ok": self.ok,
                "int_max": self.int_max.tolist(), "passes": self.passes.tolist()}


def non_neighbor_mask(graph: InterferenceGraph) -> np.ndarray:
    m = ~graph.adjacency
    np.fill_diagonal(m, False)
    return m


def check_wni(graph: InterferenceGraph, channel: ChannelMatrix, scenario: NetworkScenario,
              epsilon: float) -> WniReport:
    """Worst-case interference from non-neighbours against ``(2^eps - 1) sigma^2``."""
    mask = non_neighbor_mask(graph)
    # Int_i = sum_{j not in N_i, j != i} g[j, i] p_j^max
    int_max = (scenario.p_max[:, None] * channel.gain * mask).sum(axis=0)
    limit = (2.0 ** epsilon - 1.0) * channel.noise
    eps_min = float(np.log2(1.0 + int_max / channel.noise).max())
    # exact at the boundary: compare in the log domain too
    passes = (int_max <= limit) | (np.log2(1.0 + int_max / channel.noise) <= epsilon)
    return WniReport(int_max, channel.noise.copy(), float(epsilon), passes, eps_min)


def neighbor_only_rates(profiles: np.ndarray, channel: ChannelMatrix,
                        graph: InterferenceGraph) -> np.ndarray:
    return batch_throughput(profiles, channel, mask=graph.adjacency.astype(float))


# --------------------------------------------------------------------------
# SLI falsification
# --------------------------------------------------------------------------

@dataclass
class SliReport:
    levels_per_ue: int
    n_profiles: int
    counterexamples: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "falsified" if self.counterexamples else "not-falsified"

    def to_dict(self) -> dict:
        return {"levels_per_ue": self.levels_per_ue, "n_profiles": self.n_profiles,
                "verdict": self.verdict,
                "counterexamples": [np.asarray(c).tolist() for c in self.counterexamples]}


def dominated_by_hull(columns: np.ndarray, point: np.ndarray, tol: float = DOMINANCE_TOL) -> bool:
    """Is some convex combination of ``columns`` (n, s) >= ``point`` componentwise?"""
    if np.any(np.all(columns >= point[:, None] - tol, axis=0)):
        return True
    s = columns.shape[1]
    res = linprog_max(np.zeros(s), A_ub=-columns, b_ub=-(point - tol),
                      A_eq=np.ones((1, s)), b_eq=[1.0])
    return res.status == "optimal"


def check_sli(graph: InterferenceGraph, channel: ChannelMatrix, scenario: NetworkScenario,
              levels_per_ue: int = 5, budget: int = SLI_BUDGET,
              mis_set: Optional[MisSet] = None) -> SliReport:
    """Search a power grid for a neighbour-only rate profile outside the MIS hull.

    A clean pass only means no counterexample exists at this resolution.
    """
    n = scenario.n
    if levels_per_ue ** n > budget:
        raise ValueError(f"{levels_per_ue}^{n} profiles exceed the budget {budget}; "
                         "use a coarser grid")
    mis_set = compute_mis_set(graph, "exact") if mis_set is None else mis_set
    mask = graph.adjacency.astype(float)
    cols = batch_throughput(mis_power_profiles(mis_set, scenario.p_max), channel, mask).T
    P = profile_grid(scenario.uniform_grid(levels_per_ue))
    rates = batch_throughput(P, channel, mask)
    report = SliReport(levels_per_ue, len(P))
    for p, r in zip(P, rates):
        if not dominated_by_hull(cols, r):
            report.counterexamples.append(p)
    return report


# --------------------------------------------------------------------------
# Near-optimality gap under WNI + SLI
# --------------------------------------------------------------------------

@dataclass
class GapReport:
    epsilon: float
    wni: WniReport
    sli: SliReport
    achieved: Optional[float]
    upper_bound: Optional[float]
    certified: bool

    @property
    def gap(self) -> Optional[float]:
        if self.achieved is None or self.upper_bound is None:
            return None
        return self.upper_bound - self.achieved

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "wni": self.wni.to_dict(), "sli": self.sli.to_dict(),
                "achieved": self.achieved, "upper_bound": self.upper_bound,
                "gap": self.gap, "certified": self.certified}


def optimality_gap(scenario: NetworkScenario, graph: InterferenceGraph, epsilon: float,
                   channel: Optional[ChannelMatrix] = None, levels_per_ue: int = 5,
                   criterion: Optional[PerformanceCriterion] = None) -> GapReport:
    """Compare the MIS target with the best time sharing of neighbour-only rates.

    The upper bound is the weighted-sum LP over every grid profile's ``r'``
    vector; ``r' >= r`` makes it an upper bound on anything achievable with
    these power levels. With WNI at ``epsilon`` and SLI both holding the gap
    must stay below ``epsilon``.
    """
    channel = build_channel(scenario) if channel is None else channel
    criterion = scenario.criterion if criterion is None else criterion
    if criterion.kind != "weighted_sum":
        raise ValueError("the gap bound is stated for weighted-sum criteria")
    mis_set = compute_mis_set(graph, "exact")
    wni = check_wni(graph, channel, scenario, epsilon)
    sli = check_sli(graph, channel, scenario, levels_per_ue, mis_set=mis_set)
    achieved = solve_targets(rate_matrix(mis_set, channel, scenario.p_max), scenario.r_min,
                             criterion)
    P = profile_grid(scenario.uniform_grid(levels_per_ue))
    cols = neighbor_only_rates(P, channel, graph).T
    relaxed = solve_targets(cols, scenario.r_min, criterion)
    ach = achieved.objective if achieved.feasible else None
    ub = relaxed.objective if relaxed.feasible else None
    certified = (wni.ok and sli.verdict == "not-falsified" and ach is not None
                 and ub is not None and ub - ach <= epsilon + 1e-9)
    return GapReport(float(epsilon), wni, sli, ach, ub, certified)


# --------------------------------------------------------------------------
# Competitive ratio for the approximate pipeline
# --------------------------------------------------------------------------

@dataclass
class RatioGuaranteeReport:
    rho: int
    zeta: float
    kappa: float
    eta: float
    Delta: float
    gamma: float
    eligible: bool
    ratio_bound: float
    degree_limit: float

    def to_dict(self) -> dict:
        return asdict(self)


def _homogeneous(scenario: NetworkScenario) -> tuple[float, float, float]:
    vals = []
    for arr in (scenario.p_max, scenario.sigma2, scenario.r_min):
        if not np.allclose(arr, arr[0], rtol=1e-12, atol=0.0):
            raise HeterogeneousScenarioError("heterogeneous scenario: guarantee inapplicable")
        vals.append(float(arr[0]))
    return vals[0], vals[1], vals[2]


def ratio_guarantee_parameters(p_max: float, sigma2: float, r_min: float,
                               path_loss_exponent: float, Delta: float, rho: int,
                               zeta: float, kappa: float, eta: float) -> RatioGuaranteeReport:
    """Eligibility and ratio bound from scalar parameters."""
    snr = p_max / (Delta ** path_loss_exponent * sigma2)
    rate_zeta = math.log2(1.0 + snr / 2.0 ** zeta)
    rate_full = math.log2(1.0 + snr)
    gamma = 3.0 * (rho + 1) * r_min / rate_zeta
    first = rate_zeta / (3.0 * r_min) if r_min > 0 else math.inf
    second = kappa / (zeta * (1.0 + eta)) * rate_full if zeta > 0 else math.inf
    limit = min(first, second)
    eligible = rho + 1 < limit
    ratio = (1.0 - gamma) * (1.0 - kappa) / (1.0 + eta)
    return RatioGuaranteeReport(int(rho), float(zeta), float(kappa), float(eta), float(Delta),
                                gamma, bool(eligible), ratio, limit)


def ratio_guarantee_check(scenario: NetworkScenario, graph: InterferenceGraph, zeta: float,
                          kappa: float, eta: float, rho: Optional[int] = None) -> RatioGuaranteeReport:
    """``rho`` defaults to the maximum degree of ``graph``; Delta is the
    largest UE-to-own-BS distance."""
    p, s2, rmin = _homogeneous(scenario)
    rho = max_degree(graph) if rho is None else rho
    Delta = float(np.diag(ue_bs_distances(scenario)).max())
    return ratio_guarantee_parameters(p, s2, rmin, scenario.path_loss_exponent, Delta, rho,
                                      zeta, kappa, eta)


def observed_ratio(approx: TargetSolution, exact: TargetSolution) -> float:
    if not exact.feasible or exact.objective is None or exact.objective <= 0:
        raise ValueError("ratio undefined: exact optimum is zero or infeasible")
    if not approx.feasible:
        return 0.0
    return approx.objective / exact.objective


def compare_pipelines(scenario: NetworkScenario, graph: InterferenceGraph,
                      channel: ChannelMatrix,
                      criterion: Optional[PerformanceCriterion] = None):
    """Target LP on the approximate subset and on the full MIS set."""
    criterion = scenario.criterion if criterion is None else criterion
    w = max_rates(channel, scenario.p_max)
    out = []
    for mode in ("approximate", "exact"):
        ms = compute_mis_set(graph, mode, w)
        out.append(solve_targets(rate_matrix(ms, channel, scenario.p_max), scenario.r_min,
                                 criterion))
    return out[0], out[1]
