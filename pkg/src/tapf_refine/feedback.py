"""Bottleneck-agent identification from MAPF path feedback.

Three strategies: delay ranking (top-m pool, random k), spectral analysis of
the weighted performance discrepancy matrix (conflict counts between ideal
shortest paths scaled by pairwise delays, top eigenvectors via Lanczos), and
a uniform-random baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .grid import canonical_shortest_path
from .instance import TapfInstance
from .mapf import Solution
from .matching import Assignment

GROUP_PER_MODE = "group-per-mode"
TOP_K_FIRST_MODE = "top-k-first-mode"

_LANCZOS_SEED = 0x1A2C05  # fixed start-vector seed: results reproducible by construction


class InvalidK(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    def __init__(self, r_achieved: int, partial: Optional["SpectralResult"] = None):
        super().__init__(f"only {r_achieved} eigenpairs converged")
        self.r_achieved = r_achieved
        self.partial = partial


@dataclass
class DelayVector:
    """Per-agent delay: effective path cost minus ideal shortest distance."""

    delay: np.ndarray  # int64, >= 0


@dataclass
class ConflictMatrix:
    """Pairwise vertex+edge conflict counts between ideal shortest paths."""

    agents: List[int]  # matrix row/col -> agent id
    m: np.ndarray  # symmetric int64, zero diagonal


@dataclass
class DiscrepancyMatrix:
    """D[i][j] = M[i][j] * (delay_i + delay_j), stored sparse."""

    agents: List[int]
    d: sp.csr_matrix


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column k pairs with eigenvalues[k], unit norm


def compute_delays(
    inst: TapfInstance, assignment: Assignment, solution: Solution
) -> DelayVector:
    delay = np.empty(inst.n, dtype=np.int64)
    for i in range(inst.n):
        ideal = inst.target_dist[i][assignment.target_of[i]]
        delay[i] = solution.costs[i] - ideal
    return DelayVector(delay)


def dbs_select(
    delays: DelayVector, m: int, k: int, rng: np.random.Generator
) -> List[int]:
    """k agents drawn uniformly from the m highest-delay agents (ties: low id)."""
    n = len(delays.delay)
    m = min(m, n)
    if not (1 <= k <= m):
        raise InvalidK(f"need 1 <= k <= m <= n, got k={k}, m={m}, n={n}")
    pool = np.lexsort((np.arange(n), -delays.delay))[:m]
    picked = rng.choice(m, size=k, replace=False)
    return [int(pool[i]) for i in picked]


def random_select(n: int, k: int, rng: np.random.Generator) -> List[int]:
    if not (1 <= k <= n):
        raise InvalidK(f"need 1 <= k <= n, got k={k}, n={n}")
    return [int(i) for i in rng.choice(n, size=k, replace=False)]


def _ideal_path(inst: TapfInstance, assignment: Assignment, agent: int) -> List[int]:
    table = inst.map.distance_table(assignment.target_of[agent])
    return canonical_shortest_path(table, inst.starts[agent])


def potential_conflict_matrix(
    inst: TapfInstance, assignment: Assignment, agents: Sequence[int]
) -> ConflictMatrix:
    """Count vertex and edge conflicts between canonical ideal paths.

    Shorter paths are padded at their goal up to the longer horizon, mirroring
    MAPF conflict semantics for arrived agents.
    """
    ids = [int(a) for a in agents]
    s = len(ids)
    paths = [_ideal_path(inst, assignment, a) for a in ids]
    horizon = max(len(p) for p in paths) if paths else 0
    pos = np.empty((s, horizon), dtype=np.int64)
    for r, p in enumerate(paths):
        pos[r, : len(p)] = p
        pos[r, len(p) :] = p[-1]

    m = np.zeros((s, s), dtype=np.int64)
    for a in range(s):
        pa = pos[a]
        for b in range(a + 1, s):
            pb = pos[b]
            count = int(np.count_nonzero(pa == pb))
            if horizon > 1:
                swap = (
                    (pa[1:] == pb[:-1]) & (pb[1:] == pa[:-1]) & (pa[1:] != pa[:-1])
                )
                count += int(np.count_nonzero(swap))
            if count:
                m[a, b] = m[b, a] = count
    return ConflictMatrix(ids, m)


def discrepancy_matrix(conflicts: ConflictMatrix, delays: DelayVector) -> DiscrepancyMatrix:
    ids = conflicts.agents
    weight = delays.delay[np.array(ids, dtype=np.int64)]
    dense = conflicts.m * (weight[:, None] + weight[None, :])
    np.fill_diagonal(dense, 0)
    return DiscrepancyMatrix(ids, sp.csr_matrix(dense))


def top_eigenpairs(
    disc: DiscrepancyMatrix, r: int, iters: Optional[int] = None
) -> SpectralResult:
    """Top-r eigenpairs of the symmetric sparse matrix via Lanczos.

    Full reorthogonalization, deterministic seeded start vector, iteration cap
    min(2r + 30, dim) unless overridden. Eigenvector signs are canonicalized
    (largest-magnitude component positive).
    """
    d = disc.d
    dim = d.shape[0]
    if dim == 0:
        return SpectralResult(np.empty(0), np.empty((0, 0)))
    r = min(r, dim)
    cap = min(iters if iters is not None else 2 * r + 30, dim)
    cap = max(cap, r)

    rng = np.random.default_rng(_LANCZOS_SEED)
    q = rng.standard_normal(dim)
    q /= np.linalg.norm(q)

    basis: List[np.ndarray] = []
    alphas: List[float] = []
    betas: List[float] = []  # betas[j] couples basis vectors j and j+1
    while len(basis) < cap:
        basis.append(q)
        qmat = np.stack(basis, axis=1)
        w = d @ q
        alphas.append(float(q @ w))
        # full reorthogonalization (twice) subsumes the three-term recurrence
        w = w - qmat @ (qmat.T @ w)
        w = w - qmat @ (qmat.T @ w)
        if len(basis) == cap:
            break
        beta = float(np.linalg.norm(w))
        if beta < 1e-12:
            if len(basis) >= dim:
                break
            # invariant subspace hit: restart with a fresh orthogonal vector
            w = rng.standard_normal(dim)
            w = w - qmat @ (qmat.T @ w)
            nrm = float(np.linalg.norm(w))
            if nrm < 1e-12:
                break
            q = w / nrm
            betas.append(0.0)
        else:
            q = w / beta
            betas.append(beta)

    k = len(alphas)
    tri = np.diag(np.array(alphas))
    for j in range(k - 1):
        tri[j, j + 1] = tri[j + 1, j] = betas[j]
    theta, svec = np.linalg.eigh(tri)
    order = np.argsort(-theta)
    qmat = np.stack(basis, axis=1)

    take = min(r, k)
    values = theta[order[:take]]
    vectors = qmat @ svec[:, order[:take]]

    norm_scale = max(float(np.max(np.abs(theta))), 1e-30)
    converged = 0
    for j in range(take):
        v = vectors[:, j]
        v /= np.linalg.norm(v)
        # canonical sign: component with the largest magnitude is positive
        lead = int(np.argmax(np.abs(v)))
        if v[lead] < 0:
            v = -v
        vectors[:, j] = v
        resid = float(np.linalg.norm(d @ v - values[j] * v))
        if resid <= 1e-6 * norm_scale + 1e-12:
            converged += 1
        else:
            break

    result = SpectralResult(values[:take], vectors[:, :take])
    if converged < r:
        partial = SpectralResult(values[:converged], vectors[:, :converged])
        raise ConvergenceFailure(converged, partial)
    return result


def _subsample(
    inst: TapfInstance,
    s: int,
    prev_bottlenecks: Sequence[int],
    rng: np.random.Generator,
) -> List[int]:
    """s/2 agents nearest to the previous bottlenecks (Manhattan), rest random."""
    n = inst.n
    coords = np.array([inst.map.coords_of(v) for v in inst.starts], dtype=np.int64)
    chosen: List[int] = []
    if prev_bottlenecks:
        anchor = coords[np.array(sorted(set(prev_bottlenecks)), dtype=np.int64)]
        manhattan = np.abs(coords[:, None, :] - anchor[None, :, :]).sum(axis=2).min(axis=1)
        near = np.lexsort((np.arange(n), manhattan))[: s // 2]
        chosen = [int(i) for i in near]
    rest = np.setdiff1d(np.arange(n), np.array(chosen, dtype=np.int64))
    fill = rng.choice(len(rest), size=s - len(chosen), replace=False)
    chosen.extend(int(rest[i]) for i in fill)
    return sorted(chosen)


def sbs_select(
    inst: TapfInstance,
    assignment: Assignment,
    solution: Solution,
    k: int,
    mode: str = GROUP_PER_MODE,
    s: int = 100,
    prev_bottlenecks: Sequence[int] = (),
    rng: Optional[np.random.Generator] = None,
    m_pool: int = 10,
) -> List[int]:
    """Spectral bottleneck sampling; falls back to delay ranking when the
    discrepancy matrix carries no signal. Always returns k agents."""
    rng = rng or np.random.default_rng(0)
    n = inst.n
    delays = compute_delays(inst, assignment, solution)
    sub = _subsample(inst, s, prev_bottlenecks, rng) if n > s else list(range(n))

    conflicts = potential_conflict_matrix(inst, assignment, sub)
    disc = discrepancy_matrix(conflicts, delays)
    if disc.d.nnz == 0:
        return dbs_select(delays, max(m_pool, k), k, rng)

    r = k if mode == GROUP_PER_MODE else 1
    try:
        spec = top_eigenpairs(disc, r)
    except ConvergenceFailure as exc:
        spec = exc.partial
    if spec is None or spec.eigenvectors.shape[1] == 0:
        return dbs_select(delays, max(m_pool, k), k, rng)

    vec = spec.eigenvectors
    ids = np.array(sub, dtype=np.int64)
    picked: List[int] = []
    if mode == TOP_K_FIRST_MODE:
        mag = np.abs(vec[:, 0])
        order = np.lexsort((ids, -mag))
        picked = [int(ids[i]) for i in order[:k]]
    elif mode == GROUP_PER_MODE:
        used = set()
        for j in range(vec.shape[1]):
            mag = np.abs(vec[:, j])
            order = np.lexsort((ids, -mag))
            for i in order:
                if int(ids[i]) not in used:
                    used.add(int(ids[i]))
                    picked.append(int(ids[i]))
                    break
        # pad from the first mode if fewer modes than k were available
        j = 0
        mag = np.abs(vec[:, 0])
        order = np.lexsort((ids, -mag))
        while len(picked) < k and j < len(order):
            cand = int(ids[order[j]])
            if cand not in set(picked):
                picked.append(cand)
            j += 1
    else:
        raise ValueError(f"unknown SBS mode {mode!r}")
    return picked[:k]
