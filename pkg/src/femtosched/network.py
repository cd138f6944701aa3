"""Physical-layer arithmetic: channel gains, SINR, throughput and fading.

Conventions used throughout the package:

* cells (one UE + its receiving BS) are indexed ``0..n-1``;
* ``gain[j, i]`` is the linear power gain from UE ``j`` to BS ``i``;
* powers and noise are in mW, distances in meters, rates in bits/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

RATE_TOL = 1e-9


class DegenerateGeometryError(ValueError):
    """A UE sits exactly on top of a BS, so its path loss is undefined."""


@dataclass(frozen=True)
class CellGeometry:
    bs_position: tuple[float, ...]
    ue_position: tuple[float, ...]
    kind: str = "femto"
    # walls_to[i]: number of walls between this cell's UE and BS i
    walls_to: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in ("femto", "macro"):
            raise ValueError(f"unknown cell kind {self.kind!r}")
        if not (np.all(np.isfinite(self.bs_position)) and np.all(np.isfinite(self.ue_position))):
            raise ValueError("cell positions must be finite")
        if len(self.bs_position) != len(self.ue_position):
            raise ValueError("BS and UE positions must have the same dimension")


@dataclass(frozen=True)
class PerformanceCriterion:
    """Network performance W: weighted sum or max-min of per-UE throughput."""

    kind: str = "max_min"
    weights: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ("weighted_sum", "max_min"):
            raise ValueError(f"unknown criterion {self.kind!r}")
        if self.kind == "weighted_sum" and self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("weighted_sum weights must form a probability vector")

    @classmethod
    def average(cls) -> "PerformanceCriterion":
        return cls("weighted_sum", None)

    def weight_vector(self, n: int) -> np.ndarray:
        if self.kind != "weighted_sum":
            raise ValueError("max_min criterion has no weight vector")
        if self.weights is None:
            return np.full(n, 1.0 / n)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got {w.shape}")
        return w

    def evaluate(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self.kind == "max_min":
            return float(y.min(axis=-1)) if y.ndim == 1 else y.min(axis=-1)
        return y @ self.weight_vector(y.shape[-1])


@dataclass
class ChannelMatrix:
    gain: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        self.gain = np.asarray(self.gain, dtype=float)
        self.noise = np.asarray(self.noise, dtype=float)
        n = self.noise.shape[0]
        if self.gain.shape != (n, n):
            raise ValueError(f"gain matrix must be {n}x{n}, got {self.gain.shape}")
        if np.any(self.gain < 0):
            raise ValueError("channel gains must be non-negative")
        if np.any(self.noise <= 0):
            raise ValueError("noise power must be positive")

    @property
    def n(self) -> int:
        return self.noise.shape[0]

    @property
    def direct(self) -> np.ndarray:
        return np.diag(self.gain)


@dataclass
class NetworkScenario:
    """A complete problem instance.

    Either ``cells`` (geometry) or ``explicit_gain`` must determine the
    channel; when both are present the explicit gains win for the channel
    and the geometry is still used to build distance-threshold graphs.
    """

    name: str
    cells: list[CellGeometry]
    p_max: np.ndarray
    sigma2: np.ndarray
    r_min: np.ndarray
    delta: float
    power_grid: Optional[list[np.ndarray]] = None
    path_loss_exponent: float = 2.0
    wall_attenuation: Optional[float] = None
    criterion: PerformanceCriterion = field(default_factory=PerformanceCriterion)
    explicit_gain: Optional[np.ndarray] = None
    default_threshold: Optional[float] = None

    def __post_init__(self):
        n = len(self.cells)
        self.p_max = _per_cell(self.p_max, n, "p_max")
        self.sigma2 = _per_cell(self.sigma2, n, "sigma2")
        self.r_min = _per_cell(self.r_min, n, "r_min")
        if np.any(self.p_max <= 0):
            raise ValueError("p_max must be positive")
        if np.any(self.sigma2 <= 0):
            raise ValueError("sigma2 must be positive")
        if np.any(self.r_min < 0):
            raise ValueError("r_min must be non-negative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")
        if self.power_grid is None:
            self.power_grid = [np.array([0.0, p]) for p in self.p_max]
        grid = []
        for i, levels in enumerate(self.power_grid):
            levels = np.unique(np.asarray(levels, dtype=float))
            if levels[0] != 0.0:
                raise ValueError(f"power grid of cell {i} must contain 0")
            if levels[-1] > self.p_max[i] + 1e-12 or levels[0] < 0:
                raise ValueError(f"power grid of cell {i} exceeds [0, p_max]")
            grid.append(levels)
        self.power_grid = grid
        if self.explicit_gain is not None:
            self.explicit_gain = np.asarray(self.explicit_gain, dtype=float)
            if self.explicit_gain.shape != (n, n):
                raise ValueError("explicit gain matrix has wrong shape")

    @property
    def n(self) -> int:
        return len(self.cells)

    def bs_positions(self) -> np.ndarray:
        return np.array([c.bs_position for c in self.cells], dtype=float)

    def ue_positions(self) -> np.ndarray:
        return np.array([c.ue_position for c in self.cells], dtype=float)

    def uniform_grid(self, levels: int) -> list[np.ndarray]:
        """``levels`` evenly spaced powers in ``[0, p_max]`` for every cell."""
        if levels < 2:
            raise ValueError("need at least two power levels (0 and p_max)")
        return [np.linspace(0.0, p, levels) for p in self.p_max]


def _per_cell(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or have length {n}")
    return arr


def ue_bs_distances(scenario: NetworkScenario) -> np.ndarray:
    """``D[j, i]``: distance from UE ``j`` to BS ``i``."""
    ue = scenario.ue_positions()
    bs = scenario.bs_positions()
    return np.linalg.norm(ue[:, None, :] - bs[None, :, :], axis=-1)


def build_channel(scenario: NetworkScenario) -> ChannelMatrix:
    """Path-loss channel ``g[j, i] = 1 / (D_ji^np * wall^n_ji)``."""
    if scenario.explicit_gain is not None:
        return ChannelMatrix(scenario.explicit_gain.copy(), scenario.sigma2.copy())
    dist = ue_bs_distances(scenario)
    if np.any(dist <= 0):
        raise DegenerateGeometryError("degenerate geometry: a UE coincides with a BS")
    gain = 1.0 / dist ** scenario.path_loss_exponent
    if scenario.wall_attenuation is not None:
        walls = np.zeros_like(gain)
        for j, cell in enumerate(scenario.cells):
            if cell.walls_to is not None:
                walls[j] = cell.walls_to
        gain = gain / scenario.wall_attenuation ** walls
    return ChannelMatrix(gain, scenario.sigma2.copy())


def check_profile(profile, p_max) -> np.ndarray:
    p = np.asarray(profile, dtype=float)
    if np.any(p < -1e-12) or np.any(p > np.asarray(p_max) + 1e-9):
        raise ValueError("power profile outside [0, p_max]")
    return p


def interference(profile, channel: ChannelMatrix, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Received interference at every BS; ``mask[j, i]`` selects which UEs count."""
    p = np.asarray(profile, dtype=float)
    g = channel.gain if mask is None else channel.gain * mask
    return p @ g - np.diag(g) * p


def sinr_vector(profile, channel: ChannelMatrix) -> np.ndarray:
    p = np.asarray(profile, dtype=float)
    return channel.direct * p / (interference(p, channel) + channel.noise)


def sinr(profile, channel: ChannelMatrix, i: int) -> float:
    return float(sinr_vector(profile, channel)[i])


def throughput_vector(profile, channel: ChannelMatrix) -> np.ndarray:
    return np.log2(1.0 + sinr_vector(profile, channel))


def throughput(profile, channel: ChannelMatrix, i: int) -> float:
    return float(throughput_vector(profile, channel)[i])


def neighbor_only_throughput_vector(profile, channel: ChannelMatrix, graph) -> np.ndarray:
    """Rates counting only interference from graph neighbours (``r'``)."""
    p = np.asarray(profile, dtype=float)
    adj = graph.adjacency.astype(float)
    s = channel.direct * p / (interference(p, channel, adj) + channel.noise)
    return np.log2(1.0 + s)


def neighbor_only_throughput(profile, channel: ChannelMatrix, graph, i: int) -> float:
    return float(neighbor_only_throughput_vector(profile, channel, graph)[i])


def batch_throughput(profiles: np.ndarray, channel: ChannelMatrix,
                     mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Rates for a stack of profiles, shape ``(k, n)`` -> ``(k, n)``."""
    P = np.atleast_2d(np.asarray(profiles, dtype=float))
    g = channel.gain if mask is None else channel.gain * mask
    direct = channel.direct
    interf = P @ g - P * np.diag(g)
    return np.log2(1.0 + direct * P / (interf + channel.noise))


def max_rates(channel: ChannelMatrix, p_max) -> np.ndarray:
    """``r_i^max``: rate of UE i at full power with everybody else silent."""
    return np.log2(1.0 + channel.direct * np.asarray(p_max, dtype=float) / channel.noise)


def discounted_throughput(rates, delta: float, r_max: Optional[float] = None):
    """Truncated average discounted throughput.

    ``rates`` has shape ``(T,)`` or ``(T, n)``. Returns ``(R, tail)`` where
    ``R = (1-delta) * sum_t delta^t r(t)`` and ``tail = delta^T * r_max``
    bounds the contribution of the unobserved slots (``r_max`` defaults to
    the largest observed rate).
    """
    r = np.asarray(rates, dtype=float)
    if r.shape[0] == 0:
        raise ValueError("empty rate sequence")
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    T = r.shape[0]
    w = (1.0 - delta) * delta ** np.arange(T)
    value = np.tensordot(w, r, axes=(0, 0))
    if r_max is None:
        r_max = float(r.max())
    return value, delta ** T * r_max


def apply_fading(channel: ChannelMatrix, beta: float, rng_seed) -> ChannelMatrix:
    """Multiply every power gain by an independent Rayleigh(beta) draw."""
    if beta <= 0:
        raise ValueError("Rayleigh scale beta must be positive")
    rng = np.random.default_rng(rng_seed)
    f = rng.rayleigh(scale=beta, size=channel.gain.shape)
    return ChannelMatrix(channel.gain * f, channel.noise.copy())


def profile_grid(grid: Sequence[np.ndarray]) -> np.ndarray:
    """Cartesian product of per-cell power levels, shape ``(prod, n)``."""
    mesh = np.meshgrid(*grid, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
