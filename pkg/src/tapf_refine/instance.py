"""TAPF instances: starts, per-agent target sets, scenario generation, file I/O.

An instance is the map plus n distinct starts and a sparse per-agent list of
feasible targets. Construction validates the core invariants (distinct
passable starts, reachable targets, existence of a perfect matching) and
precomputes dist(start_i, v) for every feasible (agent, target) pair so later
stages never need start-sourced BFS tables again.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from .grid import GridMap, UNREACHABLE, bfs_distance, parse_map

RETRY_LIMIT = 100


class GenerationError(RuntimeError):
    pass


class InsufficientVertices(GenerationError):
    pass


class NoSuitableRegion(GenerationError):
    pass


class InfeasibleAfterRetries(GenerationError):
    def __init__(self, limit: int):
        super().__init__(f"no feasible instance after {limit} retries")
        self.limit = limit


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TapfInstance:
    """Immutable TAPF instance.

    targets[i] is the sorted list of feasible target vertices of agent i;
    target_dist[i][v] the BFS distance from starts[i] to each of them.
    """

    def __init__(
        self,
        grid: GridMap,
        starts: Sequence[int],
        targets: Sequence[Sequence[int]],
        map_name: str = "<anonymous>",
    ):
        self.map = grid
        self.map_name = map_name
        self.starts: List[int] = [int(s) for s in starts]
        self.n = len(self.starts)
        if len(targets) != self.n:
            raise ValueError("starts and targets length mismatch")
        if len(set(self.starts)) != self.n:
            raise ValueError("starts must be distinct")
        for s in self.starts:
            grid._check_vertex(s)

        self.targets: List[List[int]] = []
        self.target_dist: List[Dict[int, int]] = []
        for i, tlist in enumerate(targets):
            uniq = sorted({int(v) for v in tlist})
            if not uniq:
                raise ValueError(f"agent {i} has an empty target list")
            table = bfs_distance(grid, self.starts[i])
            dists: Dict[int, int] = {}
            for v in uniq:
                grid._check_vertex(v)
                d = int(table.dist[v])
                if d == UNREACHABLE:
                    raise ValueError(
                        f"agent {i}: target {v} unreachable from start {self.starts[i]}"
                    )
                dists[v] = d
            self.targets.append(uniq)
            self.target_dist.append(dists)

        if not check_feasibility(self):
            raise ValueError("instance admits no feasible injective assignment")

    def is_feasible_pair(self, agent: int, vertex: int) -> bool:
        return vertex in self.target_dist[agent]

    def dist_start_to(self, agent: int, vertex: int) -> Optional[int]:
        """dist(starts[agent], vertex) for feasible targets, else None."""
        return self.target_dist[agent].get(vertex)


@dataclass
class ScenarioConfig:
    kind: str = "random"  # "random" | "hotspot"
    targets_per_agent: int = 10
    distance_band: Optional[Tuple[int, int]] = None  # random only; default 0.25/0.5*(w+h)
    hotspot_overlap: float = 0.8  # hotspot only; target mean pairwise Jaccard
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random", "hotspot"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.targets_per_agent < 1:
            raise ValueError("targets_per_agent must be >= 1")
        if self.distance_band is not None:
            lo, hi = self.distance_band
            if lo > hi:
                raise ValueError("distance band must satisfy d_min <= d_max")
        if not (0.0 < self.hotspot_overlap <= 1.0):
            raise ValueError("hotspot_overlap must be in (0, 1]")


def check_feasibility(inst: TapfInstance) -> bool:
    """True iff agents can be matched to distinct feasible targets."""
    return len(_max_matching_unmatched(inst.targets)) == 0


def _max_matching_unmatched(targets: Sequence[Sequence[int]]) -> List[int]:
    """Agents left unmatched by a maximum bipartite matching (empty = perfect)."""
    n = len(targets)
    universe = sorted({v for tl in targets for v in tl})
    col = {v: j for j, v in enumerate(universe)}
    rows, cols = [], []
    for i, tl in enumerate(targets):
        for v in tl:
            rows.append(i)
            cols.append(col[v])
    bi = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, len(universe))
    )
    match = maximum_bipartite_matching(bi, perm_type="column")
    return [i for i in range(n) if match[i] < 0]


def _default_band(grid: GridMap) -> Tuple[int, int]:
    span = grid.width + grid.height
    return (max(1, round(0.25 * span)), max(1, round(0.5 * span)))


def _sample_starts(grid: GridMap, n: int, rng: np.random.Generator) -> List[int]:
    if grid.num_vertices < n:
        raise InsufficientVertices(
            f"map has {grid.num_vertices} passable cells, need {n} starts"
        )
    return [int(v) for v in rng.choice(grid.num_vertices, size=n, replace=False)]


def generate_random_scenario(
    grid: GridMap, n: int, cfg: ScenarioConfig, map_name: str = "<anonymous>"
) -> TapfInstance:
    """Targets drawn uniformly from a per-agent distance band around each start."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x52414E44]))
    d_min, d_max = cfg.distance_band or _default_band(grid)
    starts = _sample_starts(grid, n, rng)

    bands: List[np.ndarray] = []
    for s in starts:
        dist = bfs_distance(grid, s).dist
        band = np.where((dist >= d_min) & (dist <= d_max))[0]
        if len(band) == 0:
            raise InsufficientVertices(
                f"no vertices at distance [{d_min}, {d_max}] from start {s}"
            )
        bands.append(band)

    def draw(i: int) -> List[int]:
        band = bands[i]
        k = min(cfg.targets_per_agent, len(band))
        return sorted(int(v) for v in rng.choice(band, size=k, replace=False))

    targets = [draw(i) for i in range(n)]
    for attempt in range(RETRY_LIMIT + 1):
        bad = _max_matching_unmatched(targets)
        if not bad:
            return TapfInstance(grid, starts, targets, map_name)
        if attempt == RETRY_LIMIT:
            raise InfeasibleAfterRetries(RETRY_LIMIT)
        for i in bad:
            targets[i] = draw(i)
    raise AssertionError("unreachable")


def _hotspot_region(
    grid: GridMap, need: int, rng: np.random.Generator
) -> np.ndarray:
    """Exactly ``need`` passable cells from the smallest square window around
    a random center that can hold them (trimmed center-out, so the region
    stays densely packed)."""
    center = int(rng.integers(grid.num_vertices))
    cx, cy = grid.coords_of(center)
    max_radius = max(grid.width, grid.height)
    ids = grid.vertex_ids
    for radius in range(max_radius + 1):
        x0, x1 = max(0, cx - radius), min(grid.width, cx + radius + 1)
        y0, y1 = max(0, cy - radius), min(grid.height, cy + radius + 1)
        window = ids[y0:y1, x0:x1]
        pool = np.sort(window[window >= 0].astype(np.int64))
        if len(pool) >= need:
            cheb = np.maximum(
                np.abs(grid._cols[pool] - cx), np.abs(grid._rows[pool] - cy)
            )
            order = np.lexsort((pool, cheb))
            return np.sort(pool[order[:need]])
    raise NoSuitableRegion(
        f"map has no region with {need} passable vertices"
    )


def generate_hotspot_scenario(
    grid: GridMap, n: int, cfg: ScenarioConfig, map_name: str = "<anonymous>"
) -> TapfInstance:
    """Targets concentrated in one dense square region with heavy sharing.

    Every agent draws its targets uniformly from a single pool of
    ceil(n + (1-overlap)*n*targets_per_agent) region vertices: overlap=1
    collapses the pool to n (maximally contested, identical lists when
    n <= targets_per_agent), smaller overlaps spread agents across
    proportionally more vertices.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x484F5453]))
    tpa = cfg.targets_per_agent
    ov = cfg.hotspot_overlap
    need = max(math.ceil(n + (1.0 - ov) * n * tpa), tpa, n)
    starts = _sample_starts(grid, n, rng)
    pool = _hotspot_region(grid, need, rng)

    def draw_lists() -> List[List[int]]:
        return [
            sorted(int(v) for v in rng.choice(pool, size=min(tpa, len(pool)), replace=False))
            for _ in range(n)
        ]

    # Drop targets unreachable from an agent's start (disconnected pockets);
    # the feasibility loop below regenerates agents whose lists collapse.
    def prune(i: int, tlist: List[int]) -> List[int]:
        dist = bfs_distance(grid, starts[i]).dist
        kept = [v for v in tlist if dist[v] != UNREACHABLE]
        if not kept:
            raise NoSuitableRegion(
                f"start {starts[i]} cannot reach the hotspot region"
            )
        return kept

    targets = [prune(i, t) for i, t in enumerate(draw_lists())]
    for attempt in range(RETRY_LIMIT + 1):
        bad = _max_matching_unmatched(targets)
        if not bad:
            return TapfInstance(grid, starts, targets, map_name)
        if attempt == RETRY_LIMIT:
            raise InfeasibleAfterRetries(RETRY_LIMIT)
        redraw = draw_lists()
        for i in bad:
            targets[i] = prune(i, redraw[i])
    raise AssertionError("unreachable")


def generate_scenario(
    grid: GridMap, n: int, cfg: ScenarioConfig, map_name: str = "<anonymous>"
) -> TapfInstance:
    if cfg.kind == "random":
        return generate_random_scenario(grid, n, cfg, map_name)
    return generate_hotspot_scenario(grid, n, cfg, map_name)


# -- scenario files ----------------------------------------------------------
#
# line 1: map <relative-path>
# line 2: agents <n>
# then n lines: <sx> <sy> : <t1x> <t1y> , <t2x> <t2y> , ...
# '#' starts a comment; (x, y) = (column, row), zero-based.


def write_scenario(inst: TapfInstance, path: str, map_path: str) -> None:
    grid = inst.map
    lines = [f"map {map_path}", f"agents {inst.n}"]
    for i in range(inst.n):
        sx, sy = grid.coords_of(inst.starts[i])
        cells = " , ".join(
            "{} {}".format(*grid.coords_of(v)) for v in inst.targets[i]
        )
        lines.append(f"{sx} {sy} : {cells}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scenario(path: str, grid: Optional[GridMap] = None) -> TapfInstance:
    """Load a scenario file; the referenced map is resolved relative to it."""
    with open(path) as fh:
        raw = fh.readlines()

    records: List[Tuple[int, str]] = []
    for no, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            records.append((no, body))

    if not records or not records[0][1].startswith("map "):
        raise ParseError(records[0][0] if records else 1, "expected 'map <path>'")
    map_ref = records[0][1][4:].strip()
    if grid is None:
        map_file = os.path.join(os.path.dirname(os.path.abspath(path)), map_ref)
        try:
            with open(map_file) as fh:
                grid = parse_map(fh.read())
        except OSError as exc:
            raise ParseError(records[0][0], f"cannot open map {map_ref!r}: {exc}")

    no, line = records[1] if len(records) > 1 else (records[0][0], "")
    parts = line.split()
    if len(parts) != 2 or parts[0] != "agents":
        raise ParseError(no, "expected 'agents <n>'")
    try:
        n = int(parts[1])
    except ValueError:
        raise ParseError(no, "expected 'agents <n>'") from None
    if n < 1:
        raise ParseError(no, "agent count must be positive")
    if len(records) != 2 + n:
        raise ParseError(
            records[-1][0], f"expected {n} agent lines, found {len(records) - 2}"
        )

    def cell(no: int, tok: str) -> int:
        xy = tok.split()
        if len(xy) != 2:
            raise ParseError(no, f"expected '<x> <y>', got {tok!r}")
        try:
            x, y = int(xy[0]), int(xy[1])
        except ValueError:
            raise ParseError(no, f"non-integer coordinate in {tok!r}") from None
        try:
            return grid.vertex_at(x, y)
        except Exception as exc:
            raise ParseError(no, str(exc)) from None

    starts: List[int] = []
    targets: List[List[int]] = []
    for no, line in records[2:]:
        if ":" not in line:
            raise ParseError(no, "expected '<start> : <targets>'")
        head, tail = line.split(":", 1)
        starts.append(cell(no, head.strip()))
        tl = [cell(no, tok.strip()) for tok in tail.split(",") if tok.strip()]
        if not tl:
            raise ParseError(no, "agent has no targets")
        targets.append(tl)

    if len(set(starts)) != len(starts):
        raise ParseError(records[2][0], "duplicate start cells")
    try:
        return TapfInstance(grid, starts, targets, map_name=map_ref)
    except ValueError as exc:
        raise ParseError(records[2][0], str(exc)) from None
