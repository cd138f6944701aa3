"""The non-stationary MIS scheduler and the baseline policies it is compared to."""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from .graph import InterferenceGraph
from .mis import MisSet, color_graph, color_classes, mis_power_profiles
from .network import (ChannelMatrix, NetworkScenario, PerformanceCriterion,
                      apply_fading, batch_throughput, build_channel,
                      discounted_throughput, profile_grid)
from .targets import (InfeasibleError, TargetSolution, evaluate_graph, min_discount,
                      select_optimal_threshold, solve_targets)

RENORM_TOL = 1e-12
NEG_TOL = 1e-12
CONSTANT_POWER_CAP = 10**6


class UnsafeDiscountWarning(UserWarning):
    """Discount factor below the minimum: weights may leave the simplex."""


# --------------------------------------------------------------------------
# Non-stationary policy
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SchedulerState:
    alpha: np.ndarray
    delta: float
    t: int = 0
    # first slot at which some weight went negative, if any
    violation_slot: Optional[int] = None


def select_index(alpha: np.ndarray) -> int:
    """Largest weight, lowest index on ties."""
    return int(np.argmax(alpha))


def _update(alpha: np.ndarray, r: int, delta: float) -> np.ndarray:
    new = alpha / delta
    new[r] = (alpha[r] - (1.0 - delta)) / delta
    total = new.sum()
    if abs(total - 1.0) > RENORM_TOL:
        new /= total
    return new


def step(state: SchedulerState) -> tuple[int, SchedulerState]:
    r = select_index(state.alpha)
    alpha = _update(state.alpha, r, state.delta)
    violation = state.violation_slot
    if violation is None and alpha.min() < -NEG_TOL:
        violation = state.t
    return r, replace(state, alpha=alpha, t=state.t + 1, violation_slot=violation)


def convergence_horizon(epsilon: float, theta_bd: float, delta: float) -> int:
    """Smallest integer ``T >= log(eps/theta)/log(delta) - 1`` (never negative)."""
    if not 0 < epsilon <= theta_bd:
        raise ValueError("need 0 < epsilon <= theta_bd")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    T = math.log(epsilon / theta_bd) / math.log(delta) - 1.0
    return max(0, math.ceil(T - 1e-12))


def theta_bound(R: np.ndarray) -> float:
    """Largest Euclidean norm among the rate columns; bounds every hull point."""
    return float(np.linalg.norm(np.asarray(R), axis=0).max())


@dataclass
class PolicyTrace:
    selected: np.ndarray          # (T,) set index per slot, -1 for explicit profiles
    profiles: np.ndarray          # (T, n)
    rates: np.ndarray             # (T, n)
    delta: float
    discounted: np.ndarray = field(init=False)
    tail_bound: float = field(init=False)
    violation_slot: Optional[int] = None
    min_alpha: Optional[float] = None
    decentralized_consistent: Optional[bool] = None

    def __post_init__(self):
        self.discounted, self.tail_bound = discounted_throughput(self.rates, self.delta)

    @property
    def horizon(self) -> int:
        return self.rates.shape[0]

    def to_csv(self) -> str:
        n = self.rates.shape[1]
        lines = ["t,selected_mis," + ",".join(f"r{i}" for i in range(n))]
        for t in range(self.horizon):
            lines.append(f"{t},{int(self.selected[t])}," +
                         ",".join(f"{x:.9g}" for x in self.rates[t]))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "horizon": self.horizon,
            "delta": self.delta,
            "discounted_throughput": [float(x) for x in self.discounted],
            "tail_bound": self.tail_bound,
            "violation_slot": self.violation_slot,
            "min_alpha": self.min_alpha,
            "decentralized_consistent": self.decentralized_consistent,
        }


def schedule_indices(alpha_star, delta: float, horizon: int):
    """Run the weight recursion; returns (indices, min weight seen, violation slot)."""
    state = SchedulerState(np.array(alpha_star, dtype=float), delta)
    out = np.empty(horizon, dtype=int)
    lowest = float(state.alpha.min())
    for t in range(horizon):
        out[t], state = step(state)
        lowest = min(lowest, float(state.alpha.min()))
    return out, lowest, state.violation_slot


def ue_local_schedule(alpha_star, member_of, delta: float, horizon: int) -> np.ndarray:
    """Transmit decisions of one UE computed from its own copy of the weights.

    ``member_of[j]`` says whether the UE belongs to set ``j``; no other
    information about the network is used.
    """
    member_of = np.asarray(member_of, dtype=bool)
    alpha = np.array(alpha_star, dtype=float)
    on = np.empty(horizon, dtype=bool)
    for t in range(horizon):
        r = select_index(alpha)
        on[t] = member_of[r]
        alpha = _update(alpha, r, delta)
    return on


def run_proposed(target: TargetSolution, mis_set: MisSet, scenario: NetworkScenario,
                 channel: ChannelMatrix, horizon: Optional[int] = None,
                 delta: Optional[float] = None, epsilon: float = 1e-3,
                 check_decentralized: bool = True) -> PolicyTrace:
    """Simulate the non-stationary MIS policy that tracks ``target``.

    The default horizon is ``convergence_horizon(epsilon, theta, delta) + 1``
    slots, after which the distance to the target is below ``epsilon``.
    """
    if not target.feasible:
        raise ValueError("cannot schedule an infeasible target")
    delta = scenario.delta if delta is None else delta
    dbar = min_discount(mis_set)
    if delta < dbar - 1e-12:
        warnings.warn(f"delta={delta} below the minimum {dbar:.6g}; weights may go negative",
                      UnsafeDiscountWarning, stacklevel=2)
    profiles = mis_power_profiles(mis_set, scenario.p_max)
    R = batch_throughput(profiles, channel)  # (s, n)
    R[profiles == 0] = 0.0
    if horizon is None:
        theta = theta_bound(R.T)
        horizon = convergence_horizon(min(epsilon, theta), theta, delta) + 1
    idx, lowest, violation = schedule_indices(target.alpha_star, delta, horizon)
    if violation is not None:
        warnings.warn(f"weight left the simplex at slot {violation}", UnsafeDiscountWarning,
                      stacklevel=2)
    trace = PolicyTrace(idx, profiles[idx], R[idx], delta,
                        violation_slot=violation, min_alpha=lowest)
    if check_decentralized:
        member = mis_set.membership(scenario.n)
        consistent = True
        for i in range(scenario.n):
            local = ue_local_schedule(target.alpha_star, member[i], delta, horizon)
            consistent &= bool(np.array_equal(local, member[i, idx]))
        trace.decentralized_consistent = consistent
    return trace


def target_residuals(trace: PolicyTrace, y_star) -> np.ndarray:
    """``max_i |y*_i - (1-delta) sum_{tau<=t} delta^tau r_i(tau)|`` for every t."""
    d = trace.delta
    w = (1.0 - d) * d ** np.arange(trace.horizon)
    partial = np.cumsum(w[:, None] * trace.rates, axis=0)
    return np.abs(np.asarray(y_star)[None, :] - partial).max(axis=1)


def empirical_weights(selected: np.ndarray, n_sets: int, delta: float) -> np.ndarray:
    """Discounted share of slots given to each set."""
    w = (1.0 - delta) * delta ** np.arange(len(selected))
    return np.bincount(selected, weights=w, minlength=n_sets)


# --------------------------------------------------------------------------
# Cyclic MIS TDMA
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CyclicSchedule:
    cycle: tuple[int, ...]

    def __post_init__(self):
        if len(self.cycle) < 1:
            raise ValueError("cycle length must be at least 1")

    @property
    def length(self) -> int:
        return len(self.cycle)

    def uses_every_set(self, n_sets: int) -> bool:
        return len(set(self.cycle)) == n_sets

    def covers_every_ue(self, mis_set: MisSet, n: int) -> bool:
        covered = set().union(*(mis_set[j] for j in self.cycle))
        return len(covered) == n


def _set_rates(mis_set: MisSet, scenario: NetworkScenario, channel: ChannelMatrix) -> np.ndarray:
    profiles = mis_power_profiles(mis_set, scenario.p_max)
    R = batch_throughput(profiles, channel)
    R[profiles == 0] = 0.0
    return R  # (s, n)


def cyclic_values(cycles: np.ndarray, set_rates: np.ndarray, delta: float) -> np.ndarray:
    """Closed-form discounted throughput of repeating each cycle forever.

    ``cycles`` is ``(B, L)``; returns ``(B, n)`` with
    ``(1-delta)/(1-delta^L) * sum_{t<L} delta^t r(cycle[t])``.
    """
    cycles = np.atleast_2d(cycles)
    L = cycles.shape[1]
    w = delta ** np.arange(L) * (1.0 - delta) / (1.0 - delta ** L)
    return np.einsum("t,btn->bn", w, set_rates[cycles])


def run_cyclic(schedule: CyclicSchedule, mis_set: MisSet, scenario: NetworkScenario,
               channel: ChannelMatrix, horizon: int) -> PolicyTrace:
    profiles = mis_power_profiles(mis_set, scenario.p_max)
    R = _set_rates(mis_set, scenario, channel)
    idx = np.array([schedule.cycle[t % schedule.length] for t in range(horizon)])
    return PolicyTrace(idx, profiles[idx], R[idx], scenario.delta)


def count_nontrivial(n_sets: int, L: int) -> int:
    """Number of length-L sequences over ``n_sets`` symbols using every symbol."""
    return sum((-1) ** k * math.comb(n_sets, k) * (n_sets - k) ** L for k in range(n_sets + 1))


def iter_nontrivial(n_sets: int, L: int) -> Iterator[tuple[int, ...]]:
    """All sequences using every set at least once, in lexicographic order."""
    seq = [0] * L
    used = [0] * n_sets

    def rec(pos: int, missing: int):
        if pos == L:
            yield tuple(seq)
            return
        for j in range(n_sets):
            new = used[j] == 0
            if L - pos - 1 < missing - new:
                continue
            seq[pos] = j
            used[j] += 1
            yield from rec(pos + 1, missing - new)
            used[j] -= 1

    yield from rec(0, n_sets)


def sample_nontrivial(n_sets: int, L: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the sequences that use every set at least once."""
    if L < n_sets:
        raise ValueError("cycle too short to use every set")

    @functools.lru_cache(maxsize=None)
    def f(k: int, m: int) -> int:
        # length-k sequences containing m specified symbols
        return sum((-1) ** i * math.comb(m, i) * (n_sets - i) ** k for i in range(m + 1))

    out = np.empty((count, L), dtype=int)
    for b in range(count):
        missing = list(range(n_sets))
        seen: list[int] = []
        for pos in range(L):
            k, m = L - pos, len(missing)
            p_new = m * f(k - 1, m - 1) / f(k, m) if m else 0.0
            if rng.random() < p_new:
                j = missing.pop(int(rng.integers(m)))
                seen.append(j)
            else:
                j = seen[int(rng.integers(len(seen)))]
            out[b, pos] = j
    return out


@dataclass
class CyclicSearchResult:
    schedule: Optional[CyclicSchedule]
    value: Optional[float]
    values: Optional[np.ndarray]
    exhaustive: bool
    n_candidates: int
    n_evaluated: int


def search_cyclic(mis_set: MisSet, L: int, scenario: NetworkScenario, channel: ChannelMatrix,
                  criterion: Optional[PerformanceCriterion] = None, budget: int = 10**6,
                  seed: Optional[int] = None, chunk: int = 4096) -> CyclicSearchResult:
    """Best cyclic schedule of length L among those using every set once or more.

    Exhaustive when the number of such schedules fits in ``budget``, otherwise
    ``budget`` uniform samples (``seed`` required). Schedules whose
    discounted throughput misses a rate floor are ignored.
    """
    criterion = scenario.criterion if criterion is None else criterion
    s = len(mis_set)
    R = _set_rates(mis_set, scenario, channel)
    total = count_nontrivial(s, L)
    exhaustive = total <= budget
    if not exhaustive and seed is None:
        raise ValueError("randomized cyclic search needs a seed")
    rng = np.random.default_rng(seed) if seed is not None else None

    def batches():
        if exhaustive:
            it = iter_nontrivial(s, L)
            while True:
                block = list(itertools.islice(it, chunk))
                if not block:
                    return
                yield np.array(block, dtype=int)
        else:
            left = budget
            while left > 0:
                k = min(chunk, left)
                yield sample_nontrivial(s, L, k, rng)
                left -= k

    best_val, best_cycle, best_vec = -np.inf, None, None
    evaluated = 0
    for block in batches():
        V = cyclic_values(block, R, scenario.delta)
        score = np.asarray(criterion.evaluate(V), dtype=float)
        score[np.any(V < scenario.r_min - 1e-9, axis=1)] = -np.inf
        k = int(np.argmax(score))
        if score[k] > best_val + 1e-12:
            best_val, best_cycle, best_vec = float(score[k]), tuple(int(x) for x in block[k]), V[k]
        evaluated += len(block)
    if best_cycle is None:
        return CyclicSearchResult(None, None, None, exhaustive, total, evaluated)
    return CyclicSearchResult(CyclicSchedule(best_cycle), best_val, best_vec,
                              exhaustive, total, evaluated)


# --------------------------------------------------------------------------
# Constant power control
# --------------------------------------------------------------------------

@dataclass
class ConstantPowerResult:
    profile: Optional[np.ndarray]
    value: Optional[float]
    rates: Optional[np.ndarray]
    exhaustive: bool
    n_evaluated: int
    # True when the continuous SINR-target LP proves no constant profile at all
    # (on any grid) meets the rate floors
    certified_infeasible: bool = False

    @property
    def feasible(self) -> bool:
        return self.profile is not None


def constant_power_infeasible(scenario: NetworkScenario, channel: ChannelMatrix) -> bool:
    """Exact test: is there no power vector in ``[0, p_max]^n`` meeting every floor?

    ``r_i >= R_i^min`` is linear in ``p`` once written as
    ``g_ii p_i >= c_i (sum_{j!=i} g_ji p_j + sigma_i^2)`` with ``c_i = 2^R - 1``.
    """
    from .lp import linprog_max

    n = scenario.n
    c = 2.0 ** scenario.r_min - 1.0
    if np.all(c == 0):
        return False
    G = channel.gain
    A = c[:, None] * G.T
    A[np.diag_indices(n)] = -G.diagonal()
    b = -c * channel.noise
    # scale powers to [0, 1] for conditioning
    A = A * scenario.p_max[None, :]
    res = linprog_max(np.zeros(n), A_ub=np.vstack([A, np.eye(n)]),
                      b_ub=np.concatenate([b, np.ones(n)]))
    return res.status == "infeasible"


def constant_power_search(scenario: NetworkScenario, channel: ChannelMatrix,
                          criterion: Optional[PerformanceCriterion] = None,
                          grid: Optional[list[np.ndarray]] = None,
                          cap: int = CONSTANT_POWER_CAP, chunk: int = 65536,
                          certify: bool = True) -> ConstantPowerResult:
    """Best time-invariant power profile on a finite grid.

    Exhaustive up to ``cap`` grid points, coordinate ascent (heuristic)
    beyond. Profiles that miss a rate floor do not qualify.
    """
    criterion = scenario.criterion if criterion is None else criterion
    grid = scenario.uniform_grid(11) if grid is None else [np.asarray(g, float) for g in grid]
    size = math.prod(len(g) for g in grid)
    certified = certify and constant_power_infeasible(scenario, channel)
    if certified:
        return ConstantPowerResult(None, None, None, size <= cap, 0, True)
    if size <= cap:
        P = profile_grid(grid)
        best_val, best_k, best_rates = -np.inf, None, None
        for start in range(0, len(P), chunk):
            r = batch_throughput(P[start:start + chunk], channel)
            score = np.asarray(criterion.evaluate(r), dtype=float)
            score[np.any(r < scenario.r_min - 1e-9, axis=1)] = -np.inf
            k = int(np.argmax(score))
            if score[k] > best_val + 1e-12:
                best_val, best_k, best_rates = float(score[k]), start + k, r[k]
        if best_k is None:
            return ConstantPowerResult(None, None, None, True, len(P))
        return ConstantPowerResult(P[best_k], best_val, best_rates, True, len(P))
    return _coordinate_ascent(scenario, channel, criterion, grid)


def _coordinate_ascent(scenario, channel, criterion, grid) -> ConstantPowerResult:
    n = scenario.n

    def score(p):
        r = batch_throughput(p[None, :], channel)[0]
        short = float(np.clip(scenario.r_min - r, 0, None).sum())
        return (0.0 if short <= 1e-9 else -short, float(criterion.evaluate(r)) if short <= 1e-9 else 0.0), r

    starts = [np.array([g[-1] for g in grid])]
    levels = min(len(g) for g in grid)
    starts += [np.array([g[k] for g in grid]) for k in range(1, levels - 1)]
    evaluated = 0
    best = None
    for p in starts:
        p = p.copy()
        cur, r = score(p)
        evaluated += 1
        improved = True
        while improved:
            improved = False
            for i in range(n):
                for lvl in grid[i]:
                    if lvl == p[i]:
                        continue
                    q = p.copy()
                    q[i] = lvl
                    sc, rq = score(q)
                    evaluated += 1
                    if sc > tuple(x + 1e-12 for x in cur):
                        p, cur, r, improved = q, sc, rq, True
        if cur[0] == 0.0 and (best is None or cur[1] > best[1] + 1e-12):
            best = (p, cur[1], r)
    if best is None:
        return ConstantPowerResult(None, None, None, False, evaluated)
    return ConstantPowerResult(best[0], best[1], best[2], False, evaluated)


# --------------------------------------------------------------------------
# Coloring-based TDMA
# --------------------------------------------------------------------------

def coloring_tdma_bound(graph: InterferenceGraph, scenario: NetworkScenario,
                        channel: ChannelMatrix,
                        criterion: Optional[PerformanceCriterion] = None) -> TargetSolution:
    """Best time sharing among the color classes (each class at full power).

    Any coloring-based TDMA or frequency reuse schedule lies in this hull,
    so the optimum is an upper bound on all of them.
    """
    criterion = scenario.criterion if criterion is None else criterion
    classes = color_classes(color_graph(graph))
    P = np.zeros((len(classes), scenario.n))
    for j, cls in enumerate(classes):
        P[j, list(cls)] = scenario.p_max[list(cls)]
    R = batch_throughput(P, channel)
    R[P == 0] = 0.0
    return solve_targets(R.T, scenario.r_min, criterion)


# --------------------------------------------------------------------------
# Time-varying channels
# --------------------------------------------------------------------------

@dataclass
class FadingSummary:
    beta: float
    fixed_threshold: float
    fixed_values: np.ndarray
    reselect_values: np.ndarray
    reselect_thresholds: np.ndarray
    block_slots: np.ndarray

    @property
    def fixed_mean(self) -> float:
        return float(np.average(self.fixed_values, weights=self.block_slots))

    @property
    def reselect_mean(self) -> float:
        return float(np.average(self.reselect_values, weights=self.block_slots))

    @property
    def loss(self) -> float:
        return 1.0 - self.fixed_mean / self.reselect_mean


def run_fading_experiment(scenario: NetworkScenario, beta: float, block_len: int = 50,
                          total_slots: int = 10_000, seed: int = 0, mode: str = "exact",
                          criterion: Optional[PerformanceCriterion] = None) -> FadingSummary:
    """Fixed path-loss graph vs full per-block graph reselection under Rayleigh fading.

    Every ``block_len`` slots the fading is redrawn. The fixed strategy keeps
    the graph chosen from path loss alone and only re-solves the target
    weights; the reselect strategy redoes the threshold sweep. Each block is
    scored by the optimal target value, which the scheduler attains.
    """
    if block_len < 1:
        raise ValueError("block_len must be at least 1")
    criterion = scenario.criterion if criterion is None else criterion
    base = build_channel(scenario)
    fixed = select_optimal_threshold(scenario, mode, base, criterion)
    n_blocks = math.ceil(total_slots / block_len)
    slots = np.array([min(block_len, total_slots - b * block_len) for b in range(n_blocks)])
    fixed_vals = np.zeros(n_blocks)
    re_vals = np.zeros(n_blocks)
    re_thr = np.zeros(n_blocks)
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    for b in range(n_blocks):
        faded = apply_fading(base, beta, seeds[b])
        _, _, sol = evaluate_graph(fixed.graph, scenario, faded, mode, criterion)
        fixed_vals[b] = sol.objective if sol.feasible else 0.0
        try:
            best = select_optimal_threshold(scenario, mode, faded, criterion)
            re_vals[b] = best.solution.objective
            re_thr[b] = best.threshold
        except InfeasibleError:
            re_vals[b], re_thr[b] = 0.0, np.nan
    return FadingSummary(beta, fixed.threshold, fixed_vals, re_vals, re_thr, slots)
