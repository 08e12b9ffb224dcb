"""Fast suboptimal MAPF engine and solution verification.

One-step configurations come from a PIBT generator (dynamic priorities,
priority inheritance, backtracking); a LaCAM-style depth-first search over
configurations wraps it, lazily enumerating per-node constraints that pin one
agent's next vertex at a time, with revisit detection through a configuration
hash table. Unbounded suboptimal: fast, deterministic for fixed inputs, no
quality guarantee.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import GridMap
from .instance import TapfInstance
from .matching import Assignment, assignment_lower_bound


class GoalMismatch(ValueError):
    pass


@dataclass
class Solution:
    """Per-agent paths with flowtime and the normalized cost metric."""

    paths: List[List[int]]
    flowtime: int
    normalized_cost: float
    costs: List[int] = field(default_factory=list)  # effective cost per agent


@dataclass
class Violation:
    kind: str
    agents: Tuple[int, ...]
    t: int = -1
    detail: str = ""

    def __str__(self) -> str:
        bits = [self.kind, f"agents={self.agents}"]
        if self.t >= 0:
            bits.append(f"t={self.t}")
        if self.detail:
            bits.append(self.detail)
        return " ".join(bits)


def effective_cost(path: Sequence[int], goal: int) -> int:
    """Smallest t such that the path rests on ``goal`` from t onward."""
    if not path or path[-1] != goal:
        raise GoalMismatch(f"path ends at {path[-1] if path else None}, goal is {goal}")
    t = len(path) - 1
    while t > 0 and path[t - 1] == goal:
        t -= 1
    return t


def make_solution(
    inst: TapfInstance, assignment: Assignment, paths: List[List[int]]
) -> Solution:
    costs = [effective_cost(paths[i], assignment.target_of[i]) for i in range(inst.n)]
    flowtime = sum(costs)
    lb = assignment_lower_bound(inst)
    if lb > 0:
        normalized = flowtime / lb
    else:
        normalized = 1.0 if flowtime == 0 else float("inf")
    return Solution(paths, flowtime, normalized, costs)


# -- verification -------------------------------------------------------------


def verify_solution(
    inst: TapfInstance, assignment: Assignment, solution: Solution
) -> List[Violation]:
    """All invariant violations of (assignment, paths); empty means valid."""
    out: List[Violation] = []
    grid = inst.map
    n = inst.n

    for msg in assignment.violations(inst):
        out.append(Violation("BadAssignment", (), detail=msg))

    paths = solution.paths
    if len(paths) != n:
        out.append(Violation("BadShape", (), detail=f"{len(paths)} paths for {n} agents"))
        return out

    for i, path in enumerate(paths):
        if not path:
            out.append(Violation("EmptyPath", (i,)))
            continue
        if path[0] != inst.starts[i]:
            out.append(Violation("WrongStart", (i,), detail=f"starts at {path[0]}"))
        if path[-1] != assignment.target_of[i]:
            out.append(Violation("WrongGoal", (i,), detail=f"ends at {path[-1]}"))
        for t in range(len(path) - 1):
            u, v = path[t], path[t + 1]
            if u != v and v not in grid.neighbor_lists[u]:
                out.append(
                    Violation("InvalidMove", (i,), t=t, detail=f"{u}->{v} not adjacent")
                )
    if out and any(v.kind in ("EmptyPath", "BadShape") for v in out):
        return out

    horizon = max(len(p) for p in paths)
    pos = np.empty((n, horizon), dtype=np.int64)
    for i, path in enumerate(paths):
        pos[i, : len(path)] = path
        pos[i, len(path) :] = path[-1]  # arrived agents keep occupying the goal

    # vertex conflicts: duplicate occupancy inside a column
    for t in range(horizon):
        col = pos[:, t]
        uniq, counts = np.unique(col, return_counts=True)
        for v in uniq[counts > 1]:
            agents = tuple(int(i) for i in np.where(col == v)[0])
            out.append(
                Violation(
                    "VertexConflict",
                    agents,
                    t=t,
                    detail=f"v={grid.coords_of(int(v))}",
                )
            )

    # edge conflicts: same edge traversed in opposite directions
    nv = grid.num_vertices + 1
    for t in range(horizon - 1):
        u, v = pos[:, t], pos[:, t + 1]
        moving = u != v
        if not moving.any():
            continue
        idx = np.where(moving)[0]
        fwd = u[idx] * nv + v[idx]
        rev = v[idx] * nv + u[idx]
        if not np.isin(fwd, rev).any():
            continue
        by_move = {int(c): int(i) for c, i in zip(fwd, idx)}
        for c, i in zip(rev, idx):
            j = by_move.get(int(c))
            if j is not None and j < int(i):
                out.append(
                    Violation(
                        "EdgeConflict",
                        (j, int(i)),
                        t=t,
                        detail=(
                            f"edge={grid.coords_of(int(pos[j, t]))}"
                            f"<->{grid.coords_of(int(pos[i, t]))}"
                        ),
                    )
                )
    return out


# -- engine -------------------------------------------------------------------


def _dist_list(grid: GridMap, goal: int):
    """Distance-to-goal table in the cheapest scalar-indexable form.

    Plain lists index ~3x faster than numpy scalars, which dominates the PIBT
    inner loop; on big maps the per-table list memory is not worth it.
    """
    table = grid.distance_table(goal)
    if grid.num_vertices > 20000:
        return table.dist
    lst = table._dist_list
    if lst is None:
        lst = table.dist.tolist()
        table._dist_list = lst
    return lst


class _CNode:
    """Lazy constraint-tree entry: pins ``who`` to ``where`` plus ancestors."""

    __slots__ = ("parent", "who", "where", "depth")

    def __init__(self, parent: Optional["_CNode"], who: int, where: int, depth: int):
        self.parent = parent
        self.who = who
        self.where = where
        self.depth = depth


class _HNode:
    """High-level search node: one configuration plus its constraint queue."""

    __slots__ = ("config", "parent", "depth", "prio", "order", "tree")

    def __init__(self, config, parent, depth, prio, order):
        self.config = config
        self.parent = parent
        self.depth = depth
        self.prio = prio
        self.order = order
        self.tree = deque([_CNode(None, -1, -1, 0)])


def default_horizon(grid: GridMap) -> int:
    return 10 * (grid.width + grid.height)


def solve_mapf(
    inst: TapfInstance,
    assignment: Assignment,
    deadline: Optional[float] = None,
    horizon: Optional[int] = None,
    max_nodes: Optional[int] = None,
    initial_priorities: Optional[np.ndarray] = None,
    tie_seed: int = 0,
) -> Optional[Solution]:
    """Collision-free paths for the given assignment, or None on timeout.

    ``deadline`` is a wall-clock budget in seconds (None = rely on the step
    horizon and node caps only, which keeps results machine-independent).
    Unsolvable inputs are indistinguishable from timeouts: the search is
    incomplete within any finite budget.
    """
    grid = inst.map
    n = inst.n
    horizon = horizon if horizon is not None else default_horizon(grid)
    if max_nodes is None:
        # node cost scales with n, so small teams can afford a deeper search
        max_nodes = max(20 * horizon, 400_000 // max(n, 1))
    t_end = None if deadline is None else time.monotonic() + deadline

    starts = inst.starts
    goals = assignment.target_of
    neighbor_lists = grid.neighbor_lists

    # Per-agent distance-to-goal tables from the shared per-map cache, as
    # plain lists: scalar indexing dominates the inner loop.
    dist_arrays = [_dist_list(grid, goals[i]) for i in range(n)]

    frac = np.arange(n, dtype=np.float64) / max(n, 1)
    if initial_priorities is None:
        # farthest agents first: dense goal regions then fill inside-out,
        # so late arrivals never have to punch through a parked crowd
        base = np.array([dist_arrays[i][starts[i]] for i in range(n)], dtype=np.float64) + frac
    else:
        base = np.asarray(initial_priorities, dtype=np.float64)

    nxt: List[int] = [-1] * n
    occ_now: List[int] = [-1] * grid.num_vertices
    occ_nxt: List[int] = [-1] * grid.num_vertices
    # Tie order between equally near candidates: free cells first, then a
    # hash salted by the global step counter, so displacement patterns vary
    # between steps instead of looping forever. Single-agent solves have no
    # interactions and keep the canonical lowest-id order (the returned path
    # is then exactly the canonical shortest path). Deterministic either way.
    use_salt = n > 1
    salt = int(tie_seed) * 0x9E3779B1 & 0x7FFFFFFF

    # Swap simulation: walk a width-one corridor cell by cell; degree-1 cells
    # holding an agent parked on its own goal count as walls.

    def swap_required(pusher: int, puller: int, vp: int, vl: int) -> bool:
        dp = dist_arrays[pusher]
        while dp[vl] < dp[vp]:
            usable = 0
            tmp = -1
            for u in neighbor_lists[vl]:
                b = occ_now[u]
                if u == vp or (
                    len(neighbor_lists[u]) == 1 and b != -1 and goals[b] == u
                ):
                    continue
                usable += 1
                tmp = u
            if usable >= 2:
                return False  # a junction ahead: they can pass each other
            if usable <= 0:
                break
            vp, vl = vl, tmp
        dl = dist_arrays[puller]
        return dl[vp] < dl[vl] and (dp[vp] == 0 or dp[vl] < dp[vp])

    def swap_possible(vp: int, vl: int) -> bool:
        vp0 = vp
        while vl != vp0:  # walk the puller backwards, avoid looping
            usable = 0
            tmp = -1
            for u in neighbor_lists[vl]:
                b = occ_now[u]
                if u == vp or (
                    len(neighbor_lists[u]) == 1 and b != -1 and goals[b] == u
                ):
                    continue
                usable += 1
                tmp = u
            if usable >= 2:
                return True  # junction with room to rotate the pair
            if usable <= 0:
                return False
            vp, vl = vl, tmp
        return False

    def pibt(a: int, cur) -> bool:
        va = cur[a]
        da = dist_arrays[a]
        if da[va] == 0 and occ_nxt[va] == -1:
            # settled on the goal and unchallenged: stay is always first
            nxt[a] = va
            occ_nxt[va] = a
            return True
        if use_salt:
            cands = [
                (da[u], occ_now[u] != -1, (u + salt) * 2654435761 & 0xFFFFFFFF, u)
                for u in neighbor_lists[va]
            ]
            cands.append((da[va], False, (va + salt) * 2654435761 & 0xFFFFFFFF, va))
        else:
            cands = [(da[u], occ_now[u] != -1, 0, u) for u in neighbor_lists[va]]
            cands.append((da[va], False, 0, va))
        cands.sort()
        # swap handling: when the preferred cell's occupant must trade places
        # with us through a width-one corridor, retreat (reversed preference)
        # and pull the occupant along behind us
        swap_agent = -1
        best = cands[0][-1]
        bj = occ_now[best]
        if (
            bj != -1
            and bj != a
            and nxt[bj] == -1
            and swap_required(a, bj, va, best)
            and swap_possible(best, va)
        ):
            swap_agent = bj
            cands.reverse()
        for cand in cands:
            u = cand[-1]
            if occ_nxt[u] != -1:
                continue
            b = occ_now[u]
            if b != -1 and nxt[b] == va:
                continue  # would swap across edge (va, u)
            nxt[a] = u
            occ_nxt[u] = a
            if b != -1 and b != a and nxt[b] == -1:
                if not pibt(b, cur):
                    continue  # b parked itself on u; try next candidate
            if swap_agent != -1 and nxt[swap_agent] == -1 and occ_nxt[va] == -1:
                # the blocker follows into the cell we just vacated
                nxt[swap_agent] = va
                occ_nxt[va] = swap_agent
            return True
        nxt[a] = va
        occ_nxt[va] = a  # park; may overwrite the displacer's claim on va
        return False

    def step(node: _HNode, constraints) -> Optional[Tuple[int, ...]]:
        nonlocal salt
        salt += 1
        cur = node.config
        for i in range(n):
            occ_now[cur[i]] = i
        ok = True
        for a, u in constraints:
            if occ_nxt[u] != -1:
                ok = False
                break
            nxt[a] = u
            occ_nxt[u] = a
        if ok:
            for a in node.order:
                if nxt[a] == -1 and not pibt(a, cur):
                    ok = False
                    break
        if ok:
            # reject swaps; inline checks cover inherited moves, this pass
            # also covers constraint-forced ones
            for a in range(n):
                u = nxt[a]
                if u != cur[a]:
                    b = occ_now[u]
                    if b != -1 and b != a and nxt[b] == cur[a]:
                        ok = False
                        break
        result = tuple(nxt) if ok else None
        for i in range(n):
            occ_now[cur[i]] = -1
            v = nxt[i]
            if v != -1:
                occ_nxt[v] = -1
                nxt[i] = -1
        return result

    goal_config = tuple(goals)
    goal_arr = np.array(goal_config)
    root_order = np.argsort(-base, kind="stable")
    root = _HNode(tuple(starts), None, 0, base, [int(i) for i in root_order])
    explored: Dict[Tuple[int, ...], _HNode] = {root.config: root}
    stack: List[_HNode] = [root]
    nodes = 0

    while stack:
        node = stack[-1]
        if node.config == goal_config:
            return _extract(inst, assignment, node)
        if not node.tree or node.depth >= horizon:
            stack.pop()
            continue
        if t_end is not None and time.monotonic() > t_end:
            return None
        nodes += 1
        if nodes > max_nodes:
            return None

        cnode = node.tree.popleft()
        if cnode.depth < n:
            agent = node.order[cnode.depth]
            v0 = node.config[agent]
            depth = cnode.depth + 1
            for u in neighbor_lists[v0]:
                node.tree.append(_CNode(cnode, agent, u, depth))
            node.tree.append(_CNode(cnode, agent, v0, depth))
        constraints = []
        c = cnode
        while c.who >= 0:
            constraints.append((c.who, c.where))
            c = c.parent

        config = step(node, constraints)
        if config is None:
            continue
        known = explored.get(config)
        if known is not None:
            # resume the known node's constraint tree from the stack top;
            # this revisit re-push is what lets the search leave livelock
            # cycles instead of exhaustively grinding one node's tree
            if known.tree and known is not stack[-1]:
                stack.append(known)
            continue

        prio = np.where(np.array(config) == goal_arr, frac, node.prio + 1.0)
        order = [int(i) for i in np.argsort(-prio, kind="stable")]
        child = _HNode(config, node, node.depth + 1, prio, order)
        explored[config] = child
        stack.append(child)

    return None


def _extract(inst: TapfInstance, assignment: Assignment, node: _HNode) -> Solution:
    configs = []
    cur: Optional[_HNode] = node
    while cur is not None:
        configs.append(cur.config)
        cur = cur.parent
    configs.reverse()
    n = inst.n
    paths = [[cfg[i] for cfg in configs] for i in range(n)]
    # Trim each path to its effective end (it rests on the goal afterwards).
    for i in range(n):
        goal = assignment.target_of[i]
        t = effective_cost(paths[i], goal)
        del paths[i][t + 1 :]
    return make_solution(inst, assignment, paths)


def solve_mapf_anytime(
    inst: TapfInstance,
    assignment: Assignment,
    deadline: float,
    rng: Optional[np.random.Generator] = None,
    horizon: Optional[int] = None,
    max_nodes: Optional[int] = None,
) -> Optional[Solution]:
    """Keep re-running the engine with randomized priorities, track the best.

    The first attempt uses the default priorities so a budget that only fits
    one attempt reproduces ``solve_mapf`` exactly. Returned flowtime is never
    worse than the first solution found.
    """
    rng = rng or np.random.default_rng(0)
    n = inst.n
    t_end = time.monotonic() + deadline
    best: Optional[Solution] = None
    first = True
    while True:
        remaining = t_end - time.monotonic()
        if remaining <= 0 and not first:
            break
        prio = None if first else rng.permutation(n) / max(n, 1)
        sol = solve_mapf(
            inst,
            assignment,
            deadline=max(remaining, 0.01),
            horizon=horizon,
            max_nodes=max_nodes,
            initial_priorities=prio,
        )
        first = False
        if sol is not None and (best is None or sol.flowtime < best.flowtime):
            best = sol
        if time.monotonic() >= t_end:
            break
    return best


# -- solution files -----------------------------------------------------------


def write_solution(path: str, inst: TapfInstance, solution: Solution) -> None:
    grid = inst.map
    lines = []
    for i, p in enumerate(solution.paths):
        cells = "->".join("({},{})".format(*grid.coords_of(v)) for v in p)
        lines.append(f"agent {i}: {cells}")
    lines.append(f"flowtime {solution.flowtime}")
    lines.append(f"normalized_cost {solution.normalized_cost:.6f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_solution(path: str, grid: GridMap) -> Tuple[List[List[int]], int, float]:
    """Parse a solution dump back into vertex paths plus the trailer values."""
    paths: List[List[int]] = []
    flowtime = -1
    normalized = float("nan")
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("agent "):
                _, rest = line.split(":", 1)
                cells = []
                for tok in rest.strip().split("->"):
                    tok = tok.strip().strip("()")
                    x, y = tok.split(",")
                    cells.append(grid.vertex_at(int(x), int(y)))
                paths.append(cells)
            elif line.startswith("flowtime"):
                flowtime = int(line.split()[1])
            elif line.startswith("normalized_cost"):
                normalized = float(line.split()[1])
    return paths, flowtime, normalized
