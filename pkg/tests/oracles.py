"""Independent reference implementations used to check the real code.

Everything here is deliberately brute force and shares no code path with the
package: Floyd-Warshall for distances, permutation enumeration for matchings,
joint-state Dijkstra for optimal flowtime, and direct rescans of paths for
delay/conflict formulas.
"""

from __future__ import annotations

import heapq
import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

BIG = 10**9


def floyd_warshall(grid) -> np.ndarray:
    """All-pairs distances; only sane for tiny maps."""
    n = grid.num_vertices
    d = np.full((n, n), BIG, dtype=np.int64)
    np.fill_diagonal(d, 0)
    for u in range(n):
        for v in grid.neighbor_lists[u]:
            d[u, v] = 1
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d


def brute_force_assignment(cost: np.ndarray) -> Tuple[float, Optional[Tuple[int, ...]]]:
    """Minimum-cost complete matching by enumerating all column permutations."""
    rows, cols = cost.shape
    best = np.inf
    best_perm: Optional[Tuple[int, ...]] = None
    for perm in itertools.permutations(range(cols), rows):
        total = sum(cost[r, c] for r, c in enumerate(perm))
        if total < best:
            best = total
            best_perm = perm
    return best, best_perm


def matching_exists(targets: Sequence[Sequence[int]]) -> bool:
    """Perfect-matching existence by trying every assignment order (tiny n)."""
    n = len(targets)

    def rec(i: int, used: frozenset) -> bool:
        if i == n:
            return True
        return any(v not in used and rec(i + 1, used | {v}) for v in targets[i])

    return rec(0, frozenset())


def kuhn_max_matching_size(targets: Sequence[Sequence[int]]) -> int:
    """Maximum bipartite matching size via simple augmenting paths."""
    owner: Dict[int, int] = {}

    def try_agent(i: int, seen: set) -> bool:
        for v in targets[i]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or try_agent(owner[v], seen):
                owner[v] = i
                return True
        return False

    return sum(1 for i in range(len(targets)) if try_agent(i, set()))


def joint_optimal_flowtime(grid, starts, goals) -> Optional[int]:
    """Exact optimal flowtime by Dijkstra over (configuration, parked-mask).

    Unparked agents pay 1 per step (even waiting on their goal); an agent on
    its goal may irrevocably park for free and rests there forever. Total cost
    of reaching the all-parked state equals the flowtime, because each agent
    pays exactly for the steps before it finally rests.
    """
    n = len(starts)
    full = (1 << n) - 1
    start = (tuple(starts), 0)
    dist: Dict[Tuple[Tuple[int, ...], int], int] = {start: 0}
    heap: List[Tuple[int, Tuple[Tuple[int, ...], int]]] = [(0, start)]

    while heap:
        g, state = heapq.heappop(heap)
        if g > dist.get(state, BIG):
            continue
        cfg, parked = state
        if parked == full:
            return g

        per_agent: List[List[Tuple[int, bool, int]]] = []
        for i in range(n):
            if parked >> i & 1:
                per_agent.append([(cfg[i], True, 0)])
                continue
            opts = [(v, False, 1) for v in grid.neighbor_lists[cfg[i]]]
            opts.append((cfg[i], False, 1))
            if cfg[i] == goals[i]:
                opts.append((cfg[i], True, 0))
            per_agent.append(opts)

        def expand(i: int, used: set, vs: List[int], mask: int, cost: int):
            if i == n:
                nstate = (tuple(vs), mask)
                ng = g + cost
                if ng < dist.get(nstate, BIG):
                    dist[nstate] = ng
                    heapq.heappush(heap, (ng, nstate))
                return
            for v, parks, c in per_agent[i]:
                if v in used:
                    continue
                # edge conflict against already-placed agents
                swap = any(
                    v == cfg[j] and vs[j] == cfg[i] and v != cfg[i]
                    for j in range(i)
                )
                if swap:
                    continue
                used.add(v)
                vs.append(v)
                expand(i + 1, used, vs, mask | (parks << i), cost + c)
                vs.pop()
                used.discard(v)

        expand(0, set(), [], parked, 0)
    return None


def rederive_delays(inst, assignment, solution) -> List[int]:
    out = []
    for i in range(inst.n):
        goal = assignment.target_of[i]
        path = solution.paths[i]
        t = len(path) - 1
        while t > 0 and path[t - 1] == goal:
            t -= 1
        # independent ideal distance: BFS from scratch
        d = _bfs_plain(inst.map, inst.starts[i])[goal]
        out.append(t - d)
    return out


def _bfs_plain(grid, source: int) -> Dict[int, int]:
    from collections import deque

    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        for v in grid.neighbor_lists[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def rederive_conflict_count(path_a: Sequence[int], path_b: Sequence[int]) -> int:
    """Vertex + edge conflicts between two goal-padded paths, step by step."""
    horizon = max(len(path_a), len(path_b))

    def at(p, t):
        return p[t] if t < len(p) else p[-1]

    count = 0
    for t in range(horizon):
        if at(path_a, t) == at(path_b, t):
            count += 1
    for t in range(horizon - 1):
        a0, a1 = at(path_a, t), at(path_a, t + 1)
        b0, b1 = at(path_b, t), at(path_b, t + 1)
        if a0 != a1 and a1 == b0 and b1 == a0:
            count += 1
    return count


def rederive_improvement(records) -> float:
    init = records[0].best_flowtime
    best = min(r.best_flowtime for r in records)
    return 100.0 * (init - best) / init if init else 0.0


def no_improving_swap(inst, assignment) -> bool:
    """Exhaustive scan: no pairwise target swap is feasible and strictly better."""
    n = inst.n
    for i in range(n):
        for j in range(i + 1, n):
            vi, vj = assignment.target_of[i], assignment.target_of[j]
            di, dj = inst.target_dist[i], inst.target_dist[j]
            if vj in di and vi in dj and di[vj] + dj[vi] < di[vi] + dj[vj]:
                return False
    return True
