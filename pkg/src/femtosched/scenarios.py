"""Named scenarios and the JSON scenario file format."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .network import CellGeometry, NetworkScenario, PerformanceCriterion


def pentagon() -> NetworkScenario:
    """Five symmetric femtocells on a ring; neighbours interfere, others do not."""
    radius = 1.0 / (2.0 * math.sin(math.pi / 5))  # unit side length
    cells = []
    for k in range(5):
        a = 2.0 * math.pi * k / 5
        bs = (radius * math.cos(a), radius * math.sin(a))
        cells.append(CellGeometry(bs, (bs[0], bs[1] - 0.1)))
    gain = np.zeros((5, 5))
    for i in range(5):
        gain[i, i] = 1.0
        gain[i, (i + 1) % 5] = gain[(i + 1) % 5, i] = 0.25
    return NetworkScenario(
        name="pentagon", cells=cells, p_max=30.0, sigma2=2.0, r_min=1.2, delta=0.8,
        criterion=PerformanceCriterion("max_min"), explicit_gain=gain,
        default_threshold=1.2,
    )


def three_floor() -> NetworkScenario:
    """Three femtocells stacked on floors 2 m apart with measured floor losses."""
    cells = [CellGeometry((0.0, 0.0, 2.0 * k), (1.0, 0.0, 2.0 * k)) for k in range(3)]
    gain = np.array([[0.5, 0.25, 0.0032],
                     [0.25, 0.5, 0.25],
                     [0.0032, 0.25, 0.5]])
    return NetworkScenario(
        name="three_floor", cells=cells, p_max=100.0, sigma2=2.0, r_min=1.2, delta=0.9,
        criterion=PerformanceCriterion.average(), explicit_gain=gain,
        default_threshold=3.0,
    )


def grid3x3(d: float = 5.0, p_max: float = 200.0, sigma2: float = 1.0,
            delta: float = 0.89, r_min: float = 0.0) -> NetworkScenario:
    """3x3 BS grid with spacing ``d``; every UE sits 3.16 m below its BS."""
    cells = [CellGeometry((x * d, y * d, 3.16), (x * d, y * d, 0.0))
             for y in range(3) for x in range(3)]
    return NetworkScenario(
        name=f"grid3x3_d{d:g}", cells=cells, p_max=p_max, sigma2=sigma2, r_min=r_min,
        delta=delta, path_loss_exponent=2.0, criterion=PerformanceCriterion("max_min"),
    )


def grid3x3_fading() -> NetworkScenario:
    return grid3x3(d=4.74, p_max=1000.0, sigma2=1.0, delta=0.89)


def kxk_grid(K: int, spacing: float = 5.0) -> NetworkScenario:
    """K x K femtocell grid, UE 1 m below each BS, fourth-power path loss."""
    cells = [CellGeometry((x * spacing, y * spacing, 1.0), (x * spacing, y * spacing, 0.0))
             for y in range(K) for x in range(K)]
    return NetworkScenario(
        name=f"grid{K}x{K}", cells=cells, p_max=100.0, sigma2=3.0, r_min=0.1, delta=0.9,
        path_loss_exponent=4.0, criterion=PerformanceCriterion.average(),
        default_threshold=7.0,
    )


def rooms12(P: int = 5, rooms: int = 12, room_len: float = 6.0,
            sigma2: float = 1.0) -> NetworkScenario:
    """A row of rooms; P UEs per room all uplink to the room's wall-mounted BS."""
    cells = []
    spacing = room_len / (1 + P)
    for r in range(rooms):
        bs = (r * room_len, 2.0)
        for k in range(P):
            ue = (r * room_len + (k + 1) * spacing, 0.0)
            walls = tuple(abs(r - q) for q in range(rooms) for _ in range(P))
            cells.append(CellGeometry(bs, ue, walls_to=walls))
    return NetworkScenario(
        name=f"rooms{rooms}_P{P}", cells=cells, p_max=1000.0, sigma2=sigma2, r_min=0.05,
        delta=0.97, path_loss_exponent=2.0, wall_attenuation=10 ** 0.25,
        criterion=PerformanceCriterion("max_min"),
    )


def single_cell() -> NetworkScenario:
    return NetworkScenario(
        name="single_cell", cells=[CellGeometry((0.0, 0.0, 2.0), (0.0, 0.0, 0.0))],
        p_max=100.0, sigma2=1.0, r_min=0.0, delta=0.5,
        criterion=PerformanceCriterion.average(),
    )


LIBRARY: dict[str, Callable[[], NetworkScenario]] = {
    "pentagon": pentagon,
    "three_floor": three_floor,
    "grid3x3": grid3x3,
    "grid3x3_fading": grid3x3_fading,
    "grid5x5": lambda: kxk_grid(5),
    "rooms12": rooms12,
    "single_cell": single_cell,
}


def scenario_library() -> dict[str, Callable[[], NetworkScenario]]:
    return dict(LIBRARY)


def _array(a):
    return None if a is None else np.asarray(a).tolist()


def scenario_to_dict(s: NetworkScenario) -> dict:
    return {
        "name": s.name,
        "cells": [{"bs": list(c.bs_position), "ue": list(c.ue_position), "kind": c.kind,
                   **({"walls_to": list(c.walls_to)} if c.walls_to is not None else {})}
                  for c in s.cells],
        "p_max": s.p_max.tolist(),
        "sigma2": s.sigma2.tolist(),
        "r_min": s.r_min.tolist(),
        "delta": s.delta,
        "power_grid": [g.tolist() for g in s.power_grid],
        "path_loss_exponent": s.path_loss_exponent,
        "wall_attenuation": s.wall_attenuation,
        "criterion": {"kind": s.criterion.kind,
                      "weights": None if s.criterion.weights is None else list(s.criterion.weights)},
        "gain": _array(s.explicit_gain),
        "default_threshold": s.default_threshold,
    }


def scenario_from_dict(d: dict) -> NetworkScenario:
    cells = [CellGeometry(tuple(c["bs"]), tuple(c["ue"]), c.get("kind", "femto"),
                          tuple(c["walls_to"]) if c.get("walls_to") is not None else None)
             for c in d["cells"]]
    crit = d.get("criterion") or {}
    weights = crit.get("weights")
    return NetworkScenario(
        name=d.get("name", "custom"), cells=cells, p_max=d["p_max"], sigma2=d["sigma2"],
        r_min=d.get("r_min", 0.0), delta=d["delta"],
        power_grid=[np.asarray(g) for g in d["power_grid"]] if d.get("power_grid") else None,
        path_loss_exponent=d.get("path_loss_exponent", 2.0),
        wall_attenuation=d.get("wall_attenuation"),
        criterion=PerformanceCriterion(crit.get("kind", "max_min"),
                                       tuple(weights) if weights is not None else None),
        explicit_gain=np.asarray(d["gain"]) if d.get("gain") is not None else None,
        default_threshold=d.get("default_threshold"),
    )


def save_scenario(s: NetworkScenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2))


def load_scenario(name_or_path: str, **params) -> NetworkScenario:
    """Library name (``grid3x3``) or path to a JSON scenario file."""
    if name_or_path in LIBRARY:
        factory = {"grid3x3": grid3x3, "rooms12": rooms12}.get(name_or_path)
        if params and factory is not None:
            return factory(**params)
        return LIBRARY[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise KeyError(f"unknown scenario {name_or_path!r}")
    return scenario_from_dict(json.loads(path.read_text()))


def describe(s: NetworkScenario) -> Optional[str]:
    return f"{s.name}: {s.n} cells, delta={s.delta}, criterion={s.criterion.kind}"
