"""Command-line entry point: solve, bench, verify, gen."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

from . import instance as inst_mod
from .grid import GridMap, MapFormatError, parse_map
from .instance import ParseError, ScenarioConfig, TapfInstance, read_scenario, write_scenario
from .mapf import Solution, make_solution, read_solution, verify_solution, write_solution
from .matching import Assignment
from .refine import InitialSolveFailure, IterationRecord, RefineConfig, improvement_rate, refine

STATS_HEADER = [
    "run_id", "map", "scenario", "agents", "seed", "feedback", "reassign", "k",
    "status", "init_flowtime", "best_flowtime", "normalized_cost", "imprv_pct",
    "iters", "elapsed_ms", "pathfind_ms", "reassign_ms",
]

AGG_HEADER = [
    "map", "scenario", "agents", "feedback", "reassign", "k", "runs",
    "imprv_mean", "imprv_min", "imprv_max", "iters_mean", "iters_min", "iters_max",
]


def parse_duration(text: str) -> float:
    """Duration strings with ms/s/m suffixes; bare numbers are seconds."""
    text = text.strip()
    try:
        if text.endswith("ms"):
            return float(text[:-2]) / 1000.0
        if text.endswith("s"):
            return float(text[:-1])
        if text.endswith("m"):
            return float(text[:-1]) * 60.0
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r} (try 10s, 200ms, 2m)")


def _load_map(path: str) -> GridMap:
    try:
        with open(path) as fh:
            return parse_map(fh.read())
    except OSError as exc:
        raise SystemExit2(f"cannot open map file {path!r}: {exc.strerror}")
    except MapFormatError as exc:
        raise SystemExit2(f"bad map file {path!r}: {exc}")


class SystemExit2(Exception):
    """Input error destined for exit code 1 with a stderr message."""


def _build_instance(args, grid: GridMap) -> TapfInstance:
    if args.scenario in ("random", "hotspot"):
        if args.agents is None:
            raise SystemExit2("--agents is required when generating a scenario")
        cfg = ScenarioConfig(
            kind=args.scenario,
            targets_per_agent=args.targets_per_agent,
            seed=args.seed,
        )
        return inst_mod.generate_scenario(
            grid, args.agents, cfg, map_name=os.path.basename(args.map)
        )
    try:
        return read_scenario(args.scenario, grid=grid)
    except OSError as exc:
        raise SystemExit2(f"cannot open scenario {args.scenario!r}: {exc}")
    except ParseError as exc:
        raise SystemExit2(f"bad scenario {args.scenario!r}: {exc}")


def _refine_config(args, deterministic_field: str = "iters") -> RefineConfig:
    return RefineConfig(
        feedback=args.feedback,
        reassign=args.reassign,
        k=args.k,
        refine_budget=args.time,
        final_opt_budget=args.final_opt,
        seed=args.seed,
        workers=args.workers,
        max_iters=getattr(args, deterministic_field, None),
    )


def _ms(value: float, deterministic: bool) -> int:
    """Wall seconds -> ms, or pass event ticks through unchanged."""
    return int(value) if deterministic else int(round(value * 1000))


def _stats_row(
    run_id: str,
    map_name: str,
    scenario: str,
    agents: int,
    seed: int,
    cfg: RefineConfig,
    status: str,
    records: Optional[List[IterationRecord]],
    solution: Optional[Solution],
) -> Dict[str, object]:
    det = cfg.max_iters is not None
    row: Dict[str, object] = {
        "run_id": run_id,
        "map": map_name,
        "scenario": scenario,
        "agents": agents,
        "seed": seed,
        "feedback": cfg.feedback,
        "reassign": cfg.reassign,
        "k": cfg.k,
        "status": status,
        "init_flowtime": "",
        "best_flowtime": "",
        "normalized_cost": "",
        "imprv_pct": "",
        "iters": "",
        "elapsed_ms": "",
        "pathfind_ms": "",
        "reassign_ms": "",
    }
    if records:
        row["init_flowtime"] = records[0].best_flowtime
        row["best_flowtime"] = records[-1].best_flowtime
        row["imprv_pct"] = f"{improvement_rate(records):.4f}"
        row["iters"] = len(records) - 1
        row["elapsed_ms"] = _ms(records[-1].elapsed, det)
        row["pathfind_ms"] = _ms(sum(r.time_in_pathfinding for r in records), det)
        row["reassign_ms"] = _ms(sum(r.time_in_reassignment for r in records), det)
    if solution is not None:
        row["normalized_cost"] = f"{solution.normalized_cost:.6f}"
    return row


def _write_stats(path: str, rows: Sequence[Dict[str, object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=STATS_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_trace(path: str, records: Sequence[IterationRecord], det: bool) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "elapsed_ms", "best_flowtime"])
        for r in records:
            writer.writerow([r.index, _ms(r.elapsed, det), r.best_flowtime])


# -- solve ---------------------------------------------------------------------


def run_solve(args) -> int:
    grid = _load_map(args.map)
    inst = _build_instance(args, grid)
    cfg = _refine_config(args)
    scenario_name = (
        args.scenario if args.scenario in ("random", "hotspot")
        else os.path.basename(args.scenario)
    )
    run_id = (
        f"{os.path.splitext(os.path.basename(args.map))[0]}"
        f"_{scenario_name}_{inst.n}a_s{args.seed}_{cfg.feedback}-{cfg.reassign}_k{cfg.k}"
    )
    try:
        assignment, solution, records = refine(inst, cfg)
    except InitialSolveFailure as exc:
        print(f"initial solve failed: {exc}", file=sys.stderr)
        if args.stats:
            _write_stats(
                args.stats,
                [_stats_row(run_id, os.path.basename(args.map), scenario_name,
                            inst.n, args.seed, cfg, "init_failure", None, None)],
            )
        return 2

    violations = verify_solution(inst, assignment, solution)
    if violations:  # defensive: refine() only returns verified tuples
        for v in violations:
            print(v, file=sys.stderr)
        return 2

    if args.out:
        write_solution(args.out, inst, solution)
    if args.stats:
        _write_stats(
            args.stats,
            [_stats_row(run_id, os.path.basename(args.map), scenario_name,
                        inst.n, args.seed, cfg, "ok", records, solution)],
        )
    if args.trace:
        _write_trace(args.trace, records, cfg.max_iters is not None)
    print(
        f"cost={solution.normalized_cost:.6f} flowtime={solution.flowtime} "
        f"iters={len(records) - 1} imprv={improvement_rate(records):.4f}"
    )
    return 0


# -- bench ---------------------------------------------------------------------


def _bench_one(task: Dict) -> Dict[str, object]:
    grid = _load_map(task["map"])
    cfg = RefineConfig(
        feedback=task["feedback"],
        reassign=task["reassign"],
        k=task["k"],
        refine_budget=task["time"],
        final_opt_budget=task["final_opt"],
        seed=task["seed"],
        workers=task["workers"],
        max_iters=task["iters"],
    )
    scen_cfg = ScenarioConfig(
        kind=task["scenario"],
        targets_per_agent=task["targets_per_agent"],
        seed=task["seed"],
    )
    map_name = os.path.basename(task["map"])
    run_id = (
        f"{os.path.splitext(map_name)[0]}_{task['scenario']}_{task['agents']}a"
        f"_s{task['seed']}_{cfg.feedback}-{cfg.reassign}_k{cfg.k}"
    )
    try:
        inst = inst_mod.generate_scenario(grid, task["agents"], scen_cfg, map_name)
        _, solution, records = refine(inst, cfg)
        return _stats_row(run_id, map_name, task["scenario"], task["agents"],
                          task["seed"], cfg, "ok", records, solution)
    except InitialSolveFailure:
        return _stats_row(run_id, map_name, task["scenario"], task["agents"],
                          task["seed"], cfg, "init_failure", None, None)
    except Exception as exc:  # keep the sweep going
        return _stats_row(run_id, map_name, task["scenario"], task["agents"],
                          task["seed"], cfg, f"error:{type(exc).__name__}", None, None)


def run_bench(args) -> int:
    agents_list = [int(x) for x in args.agents.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    feedbacks = args.feedback.split(",")
    reassigns = args.reassign.split(",")
    tasks = [
        {
            "map": args.map, "scenario": args.scenario, "agents": n, "seed": seed,
            "feedback": fb, "reassign": ra, "k": args.k, "time": args.time,
            "final_opt": args.final_opt, "workers": args.workers,
            "iters": args.iters, "targets_per_agent": args.targets_per_agent,
        }
        for n in agents_list
        for fb in feedbacks
        for ra in reassigns
        for seed in seeds
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]
    _write_stats(args.stats, rows)

    agg_path = args.agg or (args.stats + ".agg.csv")
    groups: Dict[tuple, List[Dict[str, object]]] = {}
    for row in rows:
        key = (row["map"], row["scenario"], row["agents"],
               row["feedback"], row["reassign"], row["k"])
        groups.setdefault(key, []).append(row)
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_HEADER)
        for key, members in groups.items():
            ok = [r for r in members if r["status"] == "ok"]
            imprv = [float(r["imprv_pct"]) for r in ok]
            iters = [int(r["iters"]) for r in ok]
            writer.writerow(
                list(key)
                + [len(members)]
                + (
                    [
                        f"{sum(imprv) / len(imprv):.4f}",
                        f"{min(imprv):.4f}",
                        f"{max(imprv):.4f}",
                        f"{sum(iters) / len(iters):.2f}",
                        min(iters),
                        max(iters),
                    ]
                    if ok
                    else ["", "", "", "", "", ""]
                )
            )
    n_fail = sum(1 for r in rows if r["status"] != "ok")
    print(f"bench: {len(rows)} runs, {n_fail} failures, stats={args.stats} agg={agg_path}")
    return 0


# -- verify --------------------------------------------------------------------


def run_verify(args) -> int:
    grid = _load_map(args.map)
    try:
        inst = read_scenario(args.scenario, grid=grid)
    except (OSError, ParseError) as exc:
        raise SystemExit2(f"bad scenario {args.scenario!r}: {exc}")
    try:
        paths, flowtime, normalized = read_solution(args.solution, grid)
    except (OSError, ValueError) as exc:
        raise SystemExit2(f"bad solution file {args.solution!r}: {exc}")
    if len(paths) != inst.n:
        raise SystemExit2(
            f"solution has {len(paths)} agents, scenario has {inst.n}"
        )
    try:
        assignment = Assignment([p[-1] for p in paths])
    except ValueError as exc:
        print(f"BadAssignment agents=() {exc}")
        return 3
    solution = make_solution(inst, assignment, paths)
    violations = verify_solution(inst, assignment, solution)
    for v in violations:
        print(v)
    if violations:
        return 3
    if flowtime >= 0 and flowtime != solution.flowtime:
        print(f"FlowtimeMismatch file={flowtime} recomputed={solution.flowtime}")
        return 3
    print(f"ok flowtime={solution.flowtime} normalized_cost={solution.normalized_cost:.6f}")
    return 0


# -- gen -----------------------------------------------------------------------


def run_gen(args) -> int:
    grid = _load_map(args.map)
    inst = _build_instance(args, grid)
    if not args.out:
        raise SystemExit2("--out is required for gen")
    rel = os.path.relpath(
        os.path.abspath(args.map), os.path.dirname(os.path.abspath(args.out)) or "."
    )
    write_scenario(inst, args.out, rel)
    print(f"wrote {args.out} ({inst.n} agents)")
    return 0


# -- argument plumbing -----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", required=True, help="MovingAI .map file")
    p.add_argument(
        "--scenario", required=True,
        help="'random', 'hotspot', or a scenario file path",
    )
    p.add_argument("--targets-per-agent", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def _add_budgets(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time", type=parse_duration, default=10.0,
                   help="refinement budget (e.g. 10s, 500ms)")
    p.add_argument("--final-opt", type=parse_duration, default=0.0, dest="final_opt",
                   help="final anytime path-optimization budget (0 disables)")
    p.add_argument("--iters", type=int, default=None,
                   help="run exactly N refinement iterations instead of a wall budget "
                        "(deterministic mode: reported times are event ticks)")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel candidate evaluations inside one iteration")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tapf",
        description="Anytime target assignment and pathfinding on grid maps",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _add_common(p)
    p.add_argument("--agents", type=int, default=None,
                   help="agent count (generated scenarios)")
    _add_budgets(p)
    p.add_argument("--feedback", default="dbs", choices=["dbs", "sbs", "random"])
    p.add_argument("--reassign", default="hungarian", choices=["pibt", "hungarian"])
    p.add_argument("--out", default=None, help="solution dump path")
    p.add_argument("--stats", default=None, help="stats CSV path")
    p.add_argument("--trace", default=None, help="per-iteration trace CSV path")
    p.set_defaults(func=run_solve)

    p = sub.add_parser("bench", help="run a sweep and aggregate results")
    _add_common(p)
    p.add_argument("--agents", default="50", help="comma-separated agent counts")
    _add_budgets(p)
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--feedback", default="dbs", help="comma-separated feedback kinds")
    p.add_argument("--reassign", default="hungarian", help="comma-separated reassign kinds")
    p.add_argument("--stats", required=True, help="stats CSV path")
    p.add_argument("--agg", default=None, help="aggregate CSV path (default <stats>.agg.csv)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p.set_defaults(func=run_bench)

    p = sub.add_parser("verify", help="verify a solution file")
    p.add_argument("--map", required=True)
    p.add_argument("--scenario", required=True, help="scenario file path")
    p.add_argument("--solution", required=True, help="solution dump path")
    p.set_defaults(func=run_verify)

    p = sub.add_parser("gen", help="generate a scenario file")
    _add_common(p)
    p.add_argument("--agents", type=int, default=None,
                   help="agent count (generated scenarios)")
    p.add_argument("--out", required=True, help="scenario file path")
    p.set_defaults(func=run_gen)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (inst_mod.GenerationError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
