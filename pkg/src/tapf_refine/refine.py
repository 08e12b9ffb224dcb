"""The anytime refinement loop: solve, analyze, reassign, repeat, keep the best.

Each iteration asks the feedback strategy for bottleneck agents, produces one
or more candidate assignments, evaluates each with the MAPF engine, updates
the best tuple from all verified candidates, and continues from one candidate
drawn uniformly (deliberately not always the best, to avoid stagnation).

Budgets come in two flavors: a wall-clock budget (seconds), or an exact
iteration count. With an iteration budget the loop consumes no wall-clock
decisions at all -- per-solve limits become pure step/node caps and all
reported times are event ticks -- so identical inputs give byte-identical
outputs regardless of machine load or worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .feedback import (
    GROUP_PER_MODE,
    TOP_K_FIRST_MODE,
    compute_delays,
    dbs_select,
    random_select,
    sbs_select,
)
from .instance import TapfInstance
from .mapf import (
    Solution,
    default_horizon,
    solve_mapf,
    solve_mapf_anytime,
    verify_solution,
)
from .matching import Assignment, initial_assignment
from .reassign import local_hungarian, pibt_displacement

FEEDBACK_KINDS = ("dbs", "sbs", "random")
REASSIGN_KINDS = ("pibt", "hungarian")


class InitialSolveFailure(RuntimeError):
    pass


@dataclass
class RefineConfig:
    feedback: str = "dbs"
    reassign: str = "hungarian"
    k: int = 3  # bottleneck agents per iteration
    m: int = 10  # DBS pool size
    s: int = 100  # SBS subsample size
    refine_budget: float = 10.0  # seconds; ignored when max_iters is set
    final_opt_budget: float = 0.0  # seconds; 0 disables the final anytime pass
    seed: int = 0
    workers: int = 1
    max_iters: Optional[int] = None  # deterministic iteration budget
    per_solve_budget: float = 0.5  # wall cap per candidate solve (seconds)
    horizon: Optional[int] = None
    max_nodes: Optional[int] = None

    def __post_init__(self):
        if self.feedback not in FEEDBACK_KINDS:
            raise ValueError(f"feedback must be one of {FEEDBACK_KINDS}")
        if self.reassign not in REASSIGN_KINDS:
            raise ValueError(f"reassign must be one of {REASSIGN_KINDS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.refine_budget < 0 or self.final_opt_budget < 0:
            raise ValueError("budgets must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class IterationRecord:
    index: int
    elapsed: float  # cumulative; seconds (wall mode) or event ticks (iteration mode)
    candidate_costs: Tuple[int, ...]  # flowtime per successfully evaluated candidate
    n_failed: int
    chosen: int  # index into candidate_costs, -1 when every candidate failed
    best_flowtime: int
    time_in_pathfinding: float
    time_in_reassignment: float


class _WallClock:
    def __init__(self):
        self._t0 = time.perf_counter()

    def now(self) -> float:
        return time.perf_counter() - self._t0

    def phase(self) -> float:
        return time.perf_counter()

    def phase_end(self, start: float) -> float:
        return time.perf_counter() - start


class _TickClock:
    """Counts solver/reassignment events instead of reading a real clock."""

    def __init__(self):
        self.ticks = 0

    def now(self) -> float:
        return self.ticks

    def phase(self) -> float:
        return self.ticks

    def phase_end(self, start: float) -> float:
        return self.ticks - start


def refine(
    inst: TapfInstance,
    cfg: RefineConfig,
    on_candidate: Optional[Callable[[Assignment, Optional[Solution]], None]] = None,
) -> Tuple[Assignment, Solution, List[IterationRecord]]:
    """Run the full loop; returns the best (assignment, solution) and records."""
    deterministic = cfg.max_iters is not None
    clock = _TickClock() if deterministic else _WallClock()
    rng_feedback = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    rng_select = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    rng_anytime = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))
    rng_tie = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4]))

    k = min(cfg.k, inst.n)

    # candidate solves get a tighter node cap than the initial solve: a
    # pathological candidate is just skipped, while the initial solve should
    # keep searching as long as its budget allows
    candidate_nodes = (
        cfg.max_nodes
        if cfg.max_nodes is not None
        else 6 * (cfg.horizon or default_horizon(inst.map))
    )

    def run_solver(
        asg: Assignment,
        deadline: Optional[float],
        tie_seed: int = 0,
        max_nodes: Optional[int] = None,
    ) -> Optional[Solution]:
        sol = solve_mapf(
            inst,
            asg,
            deadline=None if deterministic else deadline,
            horizon=cfg.horizon,
            max_nodes=max_nodes if max_nodes is not None else candidate_nodes,
            tie_seed=tie_seed,
        )
        if sol is not None and verify_solution(inst, asg, sol):
            sol = None  # engine produced an invalid solution; treat as failure
        if on_candidate is not None:
            on_candidate(asg, sol)
        return sol

    def tick(events: int) -> None:
        # ticked from the coordinating thread only, never from workers
        if isinstance(clock, _TickClock):
            clock.ticks += events

    asg = initial_assignment(inst)
    t0 = clock.phase()
    # a zero budget still produces the initial tuple; step/node caps bound it
    init_deadline = cfg.refine_budget if cfg.refine_budget > 0 else None
    init_nodes = cfg.max_nodes if cfg.max_nodes is not None else 40 * (
        cfg.horizon or default_horizon(inst.map)
    )
    sol = run_solver(
        asg, None if deterministic else init_deadline, max_nodes=init_nodes
    )
    tick(1)
    init_pathfind = clock.phase_end(t0)
    if sol is None:
        raise InitialSolveFailure("MAPF engine found no initial solution in budget")

    best_asg, best_sol = asg, sol
    records: List[IterationRecord] = [
        IterationRecord(
            index=0,
            elapsed=clock.now(),
            candidate_costs=(sol.flowtime,),
            n_failed=0,
            chosen=0,
            best_flowtime=sol.flowtime,
            time_in_pathfinding=init_pathfind,
            time_in_reassignment=0.0,
        )
    ]

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    prev_bottlenecks: List[int] = []
    try:
        index = 0
        while True:
            index += 1
            if deterministic:
                if index > cfg.max_iters:
                    break
            elif clock.now() >= cfg.refine_budget:
                break

            # -- feedback: pick the bottleneck set B
            if cfg.feedback == "dbs":
                delays = compute_delays(inst, asg, sol)
                bottlenecks = dbs_select(delays, cfg.m, k, rng_feedback)
            elif cfg.feedback == "random":
                bottlenecks = random_select(inst.n, k, rng_feedback)
            else:
                mode = GROUP_PER_MODE if cfg.reassign == "pibt" else TOP_K_FIRST_MODE
                bottlenecks = sbs_select(
                    inst,
                    asg,
                    sol,
                    k,
                    mode=mode,
                    s=cfg.s,
                    prev_bottlenecks=prev_bottlenecks,
                    rng=rng_feedback,
                    m_pool=cfg.m,
                )

            # -- reassignment: candidate assignments
            t0 = clock.phase()
            if cfg.reassign == "pibt":
                raw = [pibt_displacement(inst, asg, b) for b in bottlenecks]
            else:
                # all k bottlenecks form one subgroup, single candidate
                raw = [local_hungarian(inst, asg, bottlenecks, rng=rng_tie)]
            tick(len(raw))
            reassign_time = clock.phase_end(t0)
            n_failed = sum(1 for c in raw if c is None)
            candidates = [c for c in raw if c is not None]

            # -- evaluation: one MAPF solve per candidate
            t0 = clock.phase()
            if deterministic:
                deadline = None
            else:
                remaining = max(cfg.refine_budget - clock.now(), 0.02)
                deadline = min(cfg.per_solve_budget, remaining)
            # per-candidate engine tie seeds: successive solves of even an
            # unchanged assignment sample different path sets, which the
            # best-tracking then harvests (the engine stays a pure function
            # of its inputs, so runs remain reproducible end to end)
            tie_seeds = [index * 64 + j + 1 for j in range(len(candidates))]
            if pool is not None and len(candidates) > 1:
                solutions = list(
                    pool.map(
                        lambda aj: run_solver(aj[0], deadline, aj[1]),
                        zip(candidates, tie_seeds),
                    )
                )
            else:
                solutions = [
                    run_solver(a, deadline, s)
                    for a, s in zip(candidates, tie_seeds)
                ]
            tick(len(candidates))
            pathfind_time = clock.phase_end(t0)

            evaluated = [
                (a, s) for a, s in zip(candidates, solutions) if s is not None
            ]
            n_failed += len(candidates) - len(evaluated)

            for a, s in evaluated:
                if s.flowtime < best_sol.flowtime:
                    best_asg, best_sol = a, s

            if evaluated:
                chosen = int(rng_select.integers(len(evaluated)))
                asg, sol = evaluated[chosen]
            else:
                chosen = -1  # keep refining from the previous assignment

            records.append(
                IterationRecord(
                    index=index,
                    elapsed=clock.now(),
                    candidate_costs=tuple(s.flowtime for _, s in evaluated),
                    n_failed=n_failed,
                    chosen=chosen,
                    best_flowtime=best_sol.flowtime,
                    time_in_pathfinding=pathfind_time,
                    time_in_reassignment=reassign_time,
                )
            )
            prev_bottlenecks = bottlenecks
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    if cfg.final_opt_budget > 0:
        improved = solve_mapf_anytime(
            inst,
            best_asg,
            cfg.final_opt_budget,
            rng=rng_anytime,
            horizon=cfg.horizon,
            max_nodes=cfg.max_nodes,
        )
        if (
            improved is not None
            and improved.flowtime < best_sol.flowtime
            and not verify_solution(inst, best_asg, improved)
        ):
            best_sol = improved

    return best_asg, best_sol, records


def improvement_rate(records: Sequence[IterationRecord]) -> float:
    """Percent improvement of the best flowtime over the initial flowtime."""
    if not records:
        raise ValueError("need at least one record")
    init = records[0].best_flowtime
    best = records[-1].best_flowtime
    if init <= 0:
        return 0.0
    return 100.0 * (init - best) / init
