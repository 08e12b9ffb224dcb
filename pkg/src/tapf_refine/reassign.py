"""Target reassignment: displacement chains and subgroup re-matching."""

from __future__ import annotations

from typing import Optional, Sequence, Set

import numpy as np

from .instance import TapfInstance
from .matching import Assignment, NoFeasibleMatching, build_cost_matrix, hungarian


class EmptySubgroup(ValueError):
    pass


def pibt_displacement(
    inst: TapfInstance, assignment: Assignment, bottleneck: int
) -> Optional[Assignment]:
    """Move ``bottleneck`` to a better target, recursively displacing holders.

    Candidates are the agent's feasible targets except its current one, in
    ascending distance order (ties: lower vertex id). A taken candidate
    triggers a recursive displacement of its holder; recursive failure
    backtracks to the next candidate. Agents already engaged in the chain
    cannot be displaced again, which bounds the chain length by n.

    Returns a new feasible injective assignment, or None when every chain
    fails; the input assignment is never mutated.
    """
    engaged: Set[int] = set()
    claimed: Set[int] = set()  # targets taken by displacers up the chain
    moves = {}  # agent -> tentative new target

    def displace(agent: int) -> bool:
        engaged.add(agent)
        current = assignment.target_of[agent]
        dists = inst.target_dist[agent]
        for _, g in sorted((dists[v], v) for v in inst.targets[agent]):
            if g == current or g in claimed:
                continue
            holder = assignment.agent_at.get(g)
            if holder is not None and holder in engaged:
                continue  # recursion-stack rule: cannot displace again
            claimed.add(g)
            moves[agent] = g
            if holder is None or displace(holder):
                return True
            claimed.discard(g)
            del moves[agent]
        return False

    if not displace(bottleneck):
        return None

    new = assignment.copy()
    for agent in moves:
        old = assignment.target_of[agent]
        if new.agent_at.get(old) == agent:
            del new.agent_at[old]
    for agent, g in moves.items():
        new.target_of[agent] = g
        new.agent_at[g] = agent
    return new


def local_hungarian(
    inst: TapfInstance,
    assignment: Assignment,
    subgroup: Sequence[int],
    rng: Optional[np.random.Generator] = None,
) -> Optional[Assignment]:
    """Jointly re-match a subgroup over its current plus unassigned targets.

    The candidate pool is the union of the subgroup's current targets and any
    feasible target of a member that no agent holds. Agents outside the
    subgroup are untouched. The previous subgroup matching is always a valid
    candidate, so a complete matching must exist for well-formed inputs.

    Dense instances admit many minimum-cost matchings; ``rng`` shuffles the
    row/column presentation so repeated calls sample different optima instead
    of always reproducing the incumbent (costs are untouched, the result is
    still a minimum-cost matching).
    """
    members = sorted(set(int(a) for a in subgroup))
    if not members:
        raise EmptySubgroup("subgroup must not be empty")

    pool: Set[int] = {assignment.target_of[i] for i in members}
    for i in members:
        for v in inst.targets[i]:
            if v not in assignment.agent_at:
                pool.add(v)
    cols = sorted(pool)

    if rng is not None:
        members = [members[i] for i in rng.permutation(len(members))]
        cols = [cols[i] for i in rng.permutation(len(cols))]

    cost = build_cost_matrix(inst, members, cols)
    try:
        matched = hungarian(cost)
    except NoFeasibleMatching:  # pragma: no cover - excluded by construction
        raise AssertionError(
            "subgroup pool lost its own current targets; this cannot happen "
            "for a feasible injective input assignment"
        )

    new = assignment.copy()
    for i in members:
        old = new.target_of[i]
        if new.agent_at.get(old) == i:
            del new.agent_at[old]
    for r, i in enumerate(members):
        v = cols[matched[r]]
        new.target_of[i] = v
        new.agent_at[v] = i
    return new
