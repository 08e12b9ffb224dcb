"""Assignments, minimum-cost matching, and the greedy initial assignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instance import TapfInstance

# Infeasible (agent, target) pairs carry this sentinel in cost matrices.
# It is a true sentinel, never a large finite cost: the matcher refuses any
# complete matching that would touch it.
FORBIDDEN = np.inf


class NoFeasibleMatching(RuntimeError):
    pass


class InfeasibleInstance(RuntimeError):
    pass


class Assignment:
    """Injective agent -> target-vertex matching with a reverse index."""

    __slots__ = ("target_of", "agent_at")

    def __init__(self, target_of: Sequence[int]):
        self.target_of: List[int] = [int(v) for v in target_of]
        self.agent_at: Dict[int, int] = {}
        for i, v in enumerate(self.target_of):
            if v in self.agent_at:
                raise ValueError(
                    f"agents {self.agent_at[v]} and {i} share target {v}"
                )
            self.agent_at[v] = i

    def copy(self) -> "Assignment":
        new = Assignment.__new__(Assignment)
        new.target_of = list(self.target_of)
        new.agent_at = dict(self.agent_at)
        return new

    def set_target(self, agent: int, vertex: int) -> None:
        """Move ``agent`` onto ``vertex``; the vertex must be free."""
        holder = self.agent_at.get(vertex)
        if holder is not None and holder != agent:
            raise ValueError(f"target {vertex} already held by agent {holder}")
        old = self.target_of[agent]
        if self.agent_at.get(old) == agent:
            del self.agent_at[old]
        self.target_of[agent] = vertex
        self.agent_at[vertex] = agent

    def violations(self, inst: TapfInstance) -> List[str]:
        """Invariant check: injectivity plus per-agent feasibility."""
        out = []
        seen: Dict[int, int] = {}
        for i, v in enumerate(self.target_of):
            if v in seen:
                out.append(f"agents {seen[v]} and {i} share target {v}")
            seen[v] = i
            if not inst.is_feasible_pair(i, v):
                out.append(f"agent {i} assigned infeasible target {v}")
        for v, i in self.agent_at.items():
            if self.target_of[i] != v:
                out.append(f"reverse index stale at vertex {v}")
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Assignment) and self.target_of == other.target_of

    def __repr__(self) -> str:
        return f"Assignment({self.target_of})"


@dataclass
class CostMatrix:
    """Distances from a subgroup of agents to candidate target vertices.

    cost[i][j] is dist(start of rows[i], cols[j]) or inf when the pair is
    infeasible; FORBIDDEN entries are never used by the matcher.
    """

    rows: List[int]  # agent ids
    cols: List[int]  # vertex ids
    cost: np.ndarray  # float64, np.inf encodes FORBIDDEN


def build_cost_matrix(
    inst: TapfInstance, agents: Sequence[int], pool: Sequence[int]
) -> CostMatrix:
    rows = list(agents)
    cols = list(pool)
    cost = np.full((len(rows), len(cols)), np.inf)
    for r, i in enumerate(rows):
        dists = inst.target_dist[i]
        for c, v in enumerate(cols):
            d = dists.get(v)
            if d is not None:
                cost[r, c] = d
    return CostMatrix(rows, cols, cost)


def hungarian(cost: CostMatrix) -> List[int]:
    """Minimum-total-cost complete matching of rows to distinct columns.

    Returns the matched column index for every row. Ties between equally
    cheap optima follow scipy's deterministic internal order (documented
    contract: any fixed deterministic rule).
    """
    m, k = cost.cost.shape
    if m > k:
        raise NoFeasibleMatching(f"{m} rows but only {k} columns")
    try:
        rows, cols = linear_sum_assignment(cost.cost)
    except ValueError:
        raise NoFeasibleMatching("every complete matching uses a forbidden pair")
    out = [-1] * m
    for r, c in zip(rows, cols):
        if not np.isfinite(cost.cost[r, c]):
            raise NoFeasibleMatching("every complete matching uses a forbidden pair")
        out[r] = int(c)
    return out


def assignment_lower_bound(inst: TapfInstance) -> int:
    """Sum over agents of the distance to their nearest feasible target."""
    return sum(min(inst.target_dist[i].values()) for i in range(inst.n))


def initial_assignment(inst: TapfInstance) -> Assignment:
    """Greedy nearest-pair assignment, completed and polished by swaps.

    1. All feasible (agent, target) pairs are sorted by distance (ties: agent
       id, then vertex id) and claimed greedily while both sides are free.
    2. Agents the greedy pass left unassigned are completed via augmenting
       paths on the feasibility graph.
    3. Pairwise target swaps that strictly reduce the summed distance are
       applied until none remains.
    """
    n = inst.n
    pairs = sorted(
        (d, i, v)
        for i in range(n)
        for v, d in inst.target_dist[i].items()
    )
    target_of: List[Optional[int]] = [None] * n
    taken: Set[int] = set()
    for d, i, v in pairs:
        if target_of[i] is None and v not in taken:
            target_of[i] = v
            taken.add(v)

    for i in range(n):
        if target_of[i] is None and not _augment(inst, i, target_of, taken):
            raise InfeasibleInstance(f"cannot complete a matching for agent {i}")

    asg = Assignment([v for v in target_of])  # type: ignore[arg-type]
    _improve_by_swaps(inst, asg)
    return asg


def _augment(
    inst: TapfInstance,
    agent: int,
    target_of: List[Optional[int]],
    taken: Set[int],
) -> bool:
    """Kuhn augmenting path: free ``agent`` steals a target, displacing along."""
    agent_of = {v: i for i, v in enumerate(target_of) if v is not None}
    seen: Set[int] = set()

    def visit(i: int) -> bool:
        for v in inst.targets[i]:
            if v in seen:
                continue
            seen.add(v)
            holder = agent_of.get(v)
            if holder is None or visit(holder):
                target_of[i] = v
                agent_of[v] = i
                taken.add(v)
                return True
        return False

    return visit(agent)


def _improve_by_swaps(inst: TapfInstance, asg: Assignment) -> int:
    """Apply improving pairwise swaps until a fixpoint; returns swap count."""
    swaps = 0
    improved = True
    while improved:
        improved = False
        for i in range(inst.n):
            di = inst.target_dist[i]
            vi = asg.target_of[i]
            # Swap partners are exactly the holders of targets feasible for i.
            for vj in inst.targets[i]:
                j = asg.agent_at.get(vj)
                if j is None or j == i:
                    continue
                dj = inst.target_dist[j]
                if vi not in dj:
                    continue
                if di[vj] + dj[vi] < di[vi] + dj[vj]:
                    asg.target_of[i] = vj
                    asg.target_of[j] = vi
                    asg.agent_at[vj] = i
                    asg.agent_at[vi] = j
                    vi = vj
                    swaps += 1
                    improved = True
        # keep scanning full passes until nothing improves
    return swaps
