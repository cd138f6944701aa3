"""Command line front end: ``femtosched <command> <scenario> [options]``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .graph import build_graph, max_degree
from .guarantees import check_sli, check_wni, optimality_gap, ratio_guarantee_check
from .mis import EXACT_VERTEX_CAP, ExactModeLimitError
from .network import NetworkScenario, PerformanceCriterion, build_channel
from .scenarios import load_scenario, scenario_to_dict
from .scheduler import (coloring_tdma_bound, constant_power_search, run_fading_experiment,
                        run_proposed, search_cyclic, target_residuals, theta_bound)
from .targets import (InfeasibleError, evaluate_graph, min_discount,
                      select_optimal_threshold)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
OUTPUT_ENV = "FEMTOSCHED_OUTPUT_DIR"
COMMANDS = ("build-graph", "sweep-thresholds", "solve-targets", "simulate",
            "compare-baselines", "check-guarantees", "fading-experiment")


def fmt(x) -> str:
    return "" if x is None else f"{float(x):.9g}"


@dataclass
class ExperimentConfig:
    command: str
    scenario: str
    criterion: Optional[str] = None
    delta: Optional[float] = None
    allow_unsafe_delta: bool = False
    d: Optional[float] = None
    horizon: Optional[int] = None
    mode: str = "auto"
    cyclic_L: list[int] = field(default_factory=lambda: [5, 7])
    budget: int = 10**6
    levels: int = 11
    epsilon: Optional[float] = None
    zeta: Optional[float] = None
    kappa: Optional[float] = None
    eta: float = 0.0
    beta: float = 0.1
    block_len: int = 50
    slots: int = 10_000
    seed: Optional[int] = None
    out: Optional[str] = None
    params: dict = field(default_factory=dict)


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _scenario(cfg: ExperimentConfig) -> NetworkScenario:
    sc = load_scenario(cfg.scenario, **cfg.params)
    if cfg.criterion is not None:
        sc.criterion = (PerformanceCriterion.average() if cfg.criterion == "average"
                        else PerformanceCriterion(cfg.criterion))
    if cfg.delta is not None:
        sc.delta = cfg.delta
    return sc


def _mode(cfg: ExperimentConfig, sc: NetworkScenario) -> str:
    if cfg.mode != "auto":
        return cfg.mode
    return "exact" if sc.n <= EXACT_VERTEX_CAP else "approximate"


def _chosen(cfg, sc, channel, mode):
    """Graph, MIS set, rate matrix and targets at --d, else at the best threshold."""
    if cfg.d is not None:
        graph = build_graph(sc, cfg.d)
        mis_set, R, sol = evaluate_graph(graph, sc, channel, mode, sc.criterion)
        return graph, mis_set, R, sol
    try:
        best = select_optimal_threshold(sc, mode, channel)
    except ExactModeLimitError:
        if cfg.mode != "auto":
            raise
        best = select_optimal_threshold(sc, "approximate", channel)
    return best.graph, best.mis_set, best.rate_matrix, best.solution


def _check_delta(cfg, sc, mis_set) -> None:
    dbar = min_discount(mis_set)
    if sc.delta < dbar - 1e-12:
        msg = f"delta={sc.delta} is below the minimum discount {dbar:.9g} for this MIS set"
        if not cfg.allow_unsafe_delta:
            raise ConfigError(msg + " (pass --allow-unsafe-delta to run anyway)")
        warnings.warn(msg)


def _versions() -> dict:
    return {"femtosched": __version__, "numpy": np.__version__,
            "python": platform.python_version()}


class Artifacts:
    def __init__(self, cfg: ExperimentConfig, sc: NetworkScenario):
        out = cfg.out or os.environ.get(OUTPUT_ENV) or "results"
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.prefix = f"{sc.name}_{cfg.command}"
        self.files: list[str] = []
        self.cfg = cfg
        self.scenario = sc

    def write(self, suffix: str, text: str) -> Path:
        path = self.dir / f"{self.prefix}_{suffix}"
        path.write_text(text)
        self.files.append(path.name)
        return path

    def json(self, suffix: str, obj) -> Path:
        return self.write(suffix, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def manifest(self, status: str) -> Path:
        inputs = {"config": asdict(self.cfg), "scenario": scenario_to_dict(self.scenario)}
        blob = json.dumps(inputs, sort_keys=True, default=_jsonable).encode()
        return self.json("manifest.json", {
            "status": status, "inputs": inputs,
            "inputs_sha256": hashlib.sha256(blob).hexdigest(),
            "seed": self.cfg.seed, "versions": _versions(), "artifacts": list(self.files),
        })


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o)}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_build_graph(cfg, sc, art) -> int:
    d = cfg.d if cfg.d is not None else sc.default_threshold
    if d is None:
        raise ConfigError("--d is required for this scenario")
    graph = build_graph(sc, d)
    art.write("edges.csv", graph.to_edge_csv())
    art.write("adjacency.txt", graph.to_adjacency_text())
    print(f"threshold {fmt(d)}: {graph.edge_count()} edges, max degree {max_degree(graph)}")
    for u, v in graph.edges():
        print(f"{u} {v}")
    return EXIT_OK


def cmd_sweep(cfg, sc, art) -> int:
    channel = build_channel(sc)
    try:
        best = select_optimal_threshold(sc, _mode(cfg, sc), channel)
    except InfeasibleError:
        print("no candidate graph admits a feasible target")
        return EXIT_INFEASIBLE
    art.write("sweep.csv", best.table_csv())
    sys.stdout.write(best.table_csv())
    print(f"best threshold {fmt(best.threshold)} objective {fmt(best.solution.objective)}")
    return EXIT_OK


def _targets_dict(graph, mis_set, sol) -> dict:
    return {"threshold": graph.threshold_d, "edges": graph.edges(),
            "mis_sets": [list(s) for s in mis_set], "mis_mode": mis_set.mode,
            "min_discount": min_discount(mis_set), "status": sol.status,
            "objective": sol.objective,
            "y_star": None if sol.y_star is None else [float(fmt(v)) for v in sol.y_star],
            "alpha_star": None if sol.alpha_star is None else [float(fmt(v)) for v in sol.alpha_star],
            "infeasibility": sol.infeasibility}


def cmd_solve(cfg, sc, art) -> int:
    channel = build_channel(sc)
    try:
        graph, mis_set, _, sol = _chosen(cfg, sc, channel, _mode(cfg, sc))
    except InfeasibleError:
        print("infeasible: no graph meets the rate floors")
        return EXIT_INFEASIBLE
    art.json("targets.json", _targets_dict(graph, mis_set, sol))
    if not sol.feasible:
        print(f"infeasible (phase-one residual {fmt(sol.infeasibility)})")
        return EXIT_INFEASIBLE
    print(f"objective {fmt(sol.objective)}")
    print("y* = " + " ".join(fmt(v) for v in sol.y_star))
    print("alpha* = " + " ".join(fmt(v) for v in sol.alpha_star))
    return EXIT_OK


def _proposed(cfg, sc, channel, mode):
    graph, mis_set, R, sol = _chosen(cfg, sc, channel, mode)
    if not sol.feasible:
        return None
    _check_delta(cfg, sc, mis_set)
    trace = run_proposed(sol, mis_set, sc, channel, cfg.horizon)
    return graph, mis_set, R, sol, trace


def cmd_simulate(cfg, sc, art) -> int:
    channel = build_channel(sc)
    try:
        got = _proposed(cfg, sc, channel, _mode(cfg, sc))
    except InfeasibleError:
        got = None
    if got is None:
        print("infeasible target; nothing to simulate")
        return EXIT_INFEASIBLE
    graph, mis_set, R, sol, trace = got
    res = target_residuals(trace, sol.y_star)
    theta = theta_bound(R)
    bounds = sc.delta ** (np.arange(trace.horizon) + 1) * theta
    art.write("trace.csv", trace.to_csv())
    summary = trace.summary()
    summary.update({"y_star": sol.y_star, "theta_bd": theta,
                    "final_residual": float(res[-1]),
                    "residual_within_bound": bool(np.all(res <= bounds + 1e-9))})
    art.json("summary.json", summary)
    print(f"horizon {trace.horizon}, tail bound {fmt(trace.tail_bound)}")
    print("discounted throughput = " + " ".join(fmt(v) for v in trace.discounted))
    print(f"criterion value {fmt(sc.criterion.evaluate(trace.discounted))}")
    return EXIT_OK


def cmd_compare(cfg, sc, art) -> int:
    channel = build_channel(sc)
    mode = _mode(cfg, sc)
    rows = []
    try:
        got = _proposed(cfg, sc, channel, mode)
    except InfeasibleError:
        got = None
    if got is None:
        print("proposed policy infeasible")
        return EXIT_INFEASIBLE
    graph, mis_set, _, sol, trace = got
    crit = sc.criterion
    rows.append(("proposed_target", sol.objective, ""))
    rows.append(("proposed_simulated", crit.evaluate(trace.discounted), f"horizon={trace.horizon}"))
    for L in cfg.cyclic_L:
        if L < len(mis_set):
            rows.append((f"cyclic_L{L}", None, "shorter than the number of sets"))
            continue
        res = search_cyclic(mis_set, L, sc, channel, crit, cfg.budget, cfg.seed)
        note = ("exhaustive" if res.exhaustive else "sampled") + \
               f" {res.n_evaluated}/{res.n_candidates}"
        rows.append((f"cyclic_L{L}", res.value, note))
    colb = coloring_tdma_bound(graph, sc, channel, crit)
    rows.append(("coloring_upper_bound", colb.objective, "" if colb.feasible else "infeasible"))
    cp = constant_power_search(sc, channel, crit, sc.uniform_grid(cfg.levels))
    note = "exhaustive" if cp.exhaustive else "coordinate ascent"
    if cp.certified_infeasible:
        note = "certified infeasible"
    elif not cp.feasible:
        note += ", infeasible on grid"
    rows.append(("constant_power", cp.value, note))
    text = "policy,value,note\n" + "".join(f"{n},{fmt(v)},{note}\n" for n, v, note in rows)
    art.write("baselines.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_guarantees(cfg, sc, art) -> int:
    channel = build_channel(sc)
    d = cfg.d if cfg.d is not None else sc.default_threshold
    if d is None:
        raise ConfigError("--d is required for this scenario")
    graph = build_graph(sc, d)
    eps = cfg.epsilon
    report: dict = {"threshold": d}
    wni = check_wni(graph, channel, sc, 0.0 if eps is None else eps)
    eps = wni.epsilon_min if eps is None else eps
    wni = check_wni(graph, channel, sc, eps)
    report["wni"] = wni.to_dict()
    print(f"WNI at epsilon={fmt(eps)}: {'pass' if wni.ok else 'fail'} "
          f"(epsilon_min {fmt(wni.epsilon_min)})")
    levels = min(cfg.levels, 5)
    if levels ** sc.n <= 10**6:
        if sc.criterion.kind == "weighted_sum":
            gap = optimality_gap(sc, graph, eps, channel, levels)
            report["gap"] = gap.to_dict()
            print(f"SLI at {levels} levels/UE: {gap.sli.verdict}")
            print(f"achieved {fmt(gap.achieved)}, upper bound {fmt(gap.upper_bound)}, "
                  f"certified {gap.certified}")
        else:
            sli = check_sli(graph, channel, sc, levels)
            report["sli"] = sli.to_dict()
            print(f"SLI at {levels} levels/UE: {sli.verdict}")
    else:
        print("SLI check skipped: grid too large")
    if cfg.zeta is not None and cfg.kappa is not None:
        t4 = ratio_guarantee_check(sc, graph, cfg.zeta, cfg.kappa, cfg.eta)
        report["ratio"] = t4.to_dict()
        print(f"ratio guarantee: eligible {t4.eligible}, gamma {fmt(t4.gamma)}, "
              f"bound {fmt(t4.ratio_bound)}")
    art.json("guarantees.json", report)
    return EXIT_OK


def cmd_fading(cfg, sc, art) -> int:
    if cfg.seed is None:
        raise ConfigError("fading-experiment needs --seed")
    summ = run_fading_experiment(sc, cfg.beta, cfg.block_len, cfg.slots, cfg.seed, _mode(cfg, sc))
    lines = ["block,slots,fixed,reselect,reselect_threshold"]
    for b in range(len(summ.block_slots)):
        lines.append(f"{b},{summ.block_slots[b]},{fmt(summ.fixed_values[b])},"
                     f"{fmt(summ.reselect_values[b])},{fmt(summ.reselect_thresholds[b])}")
    art.write("blocks.csv", "\n".join(lines) + "\n")
    art.json("summary.json", {"beta": cfg.beta, "fixed_threshold": summ.fixed_threshold,
                              "fixed_mean": summ.fixed_mean,
                              "reselect_mean": summ.reselect_mean, "loss": summ.loss})
    print(f"fixed {fmt(summ.fixed_mean)}, reselect {fmt(summ.reselect_mean)}, "
          f"loss {100 * summ.loss:.3g}%")
    return EXIT_OK


HANDLERS = {
    "build-graph": cmd_build_graph, "sweep-thresholds": cmd_sweep,
    "solve-targets": cmd_solve, "simulate": cmd_simulate,
    "compare-baselines": cmd_compare, "check-guarantees": cmd_guarantees,
    "fading-experiment": cmd_fading,
}


def run_command(cfg: ExperimentConfig) -> int:
    if cfg.command not in HANDLERS:
        print(f"error: unknown command {cfg.command!r}", file=sys.stderr)
        return EXIT_ERROR
    try:
        sc = _scenario(cfg)
        art = Artifacts(cfg, sc)
        status = HANDLERS[cfg.command](cfg, sc, art)
    except KeyError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, ValueError, ExactModeLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    art.manifest({EXIT_OK: "ok", EXIT_INFEASIBLE: "infeasible"}.get(status, "error"))
    return status


def _param(text: str) -> tuple[str, object]:
    key, _, value = text.partition("=")
    if not value:
        raise argparse.ArgumentTypeError("scenario parameters look like name=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="femtosched", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("scenario", help="library name or path to a scenario JSON file")
        s.add_argument("--param", action="append", type=_param, default=[],
                       help="scenario factory parameter, e.g. d=4 or P=5")
        s.add_argument("--criterion", choices=["max_min", "average"])
        s.add_argument("--delta", type=float)
        s.add_argument("--allow-unsafe-delta", action="store_true")
        s.add_argument("--d", type=float, help="graph distance threshold")
        s.add_argument("--horizon", type=int)
        s.add_argument("--mode", choices=["auto", "exact", "approximate"], default="auto")
        s.add_argument("--cyclic-L", type=int, nargs="+", default=[5, 7])
        s.add_argument("--budget", type=int, default=10**6)
        s.add_argument("--levels", type=int, default=11)
        s.add_argument("--epsilon", type=float)
        s.add_argument("--zeta", type=float)
        s.add_argument("--kappa", type=float)
        s.add_argument("--eta", type=float, default=0.0)
        s.add_argument("--beta", type=float, default=0.1)
        s.add_argument("--block-len", type=int, default=50)
        s.add_argument("--slots", type=int, default=10_000)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(
        command=args.command, scenario=args.scenario, criterion=args.criterion,
        delta=args.delta, allow_unsafe_delta=args.allow_unsafe_delta, d=args.d,
        horizon=args.horizon, mode=args.mode, cyclic_L=args.cyclic_L, budget=args.budget,
        levels=args.levels, epsilon=args.epsilon, zeta=args.zeta, kappa=args.kappa,
        eta=args.eta, beta=args.beta, block_len=args.block_len, slots=args.slots,
        seed=args.seed, out=args.out, params=dict(args.param),
    )
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
