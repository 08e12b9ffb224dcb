"""Grid maps, BFS distance tables, and canonical shortest paths.

Maps are 4-connected grids parsed from the MovingAI ``.map`` text format.
Passable cells get dense vertex ids in row-major order; everything downstream
(instances, the MAPF engine, feedback analysis) works on those ids.
"""

from __future__ import annotations

import threading
from typing import Dict, Iterable, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

UNREACHABLE = -1

PASSABLE_CHARS = frozenset(".GS")
BLOCKED_CHARS = frozenset("@OTW")


class MapFormatError(ValueError):
    """Base class for .map parse failures."""


class MalformedHeader(MapFormatError):
    pass


class DimensionMismatch(MapFormatError):
    pass


class UnknownCell(MapFormatError):
    def __init__(self, char: str, row: int, col: int):
        super().__init__(f"unknown cell {char!r} at row {row}, col {col}")
        self.char = char
        self.row = row
        self.col = col


class InvalidVertex(ValueError):
    pass


class Unreachable(ValueError):
    pass


class GridMap:
    """4-connected grid over the passable cells of a width x height map.

    Immutable after construction apart from the distance-table cache, which
    supports concurrent reads with serialized inserts.
    """

    def __init__(self, passable: np.ndarray):
        passable = np.asarray(passable, dtype=bool)
        if passable.ndim != 2:
            raise ValueError("passable grid must be 2-D")
        self.height, self.width = passable.shape
        self.passable = passable

        # Dense ids over passable cells, row-major. vertex_ids[r, c] == -1 for blocked.
        self.vertex_ids = np.full((self.height, self.width), -1, dtype=np.int32)
        rr, cc = np.nonzero(passable)
        self.num_vertices = len(rr)
        self.vertex_ids[rr, cc] = np.arange(self.num_vertices, dtype=np.int32)
        self._rows = rr.astype(np.int32)
        self._cols = cc.astype(np.int32)

        self._build_adjacency()
        self._dist_cache: Dict[int, DistanceTable] = {}
        self._cache_lock = threading.Lock()

    def _build_adjacency(self) -> None:
        n = self.num_vertices
        pad = n  # dummy vertex id used to pad fixed-width neighbor rows
        # Neighbor ids in (up, left, right, down) order; with row-major ids this
        # is ascending order, which the canonical-parent rule relies on.
        adj = np.full((n, 4), pad, dtype=np.int32)
        ids = self.vertex_ids
        r, c = self._rows, self._cols
        for k, (dr, dc) in enumerate(((-1, 0), (0, -1), (0, 1), (1, 0))):
            nr, nc = r + dr, c + dc
            ok = (nr >= 0) & (nr < self.height) & (nc >= 0) & (nc < self.width)
            nb = np.full(n, pad, dtype=np.int32)
            nb_ids = ids[nr[ok], nc[ok]]
            valid = np.where(ok)[0][nb_ids >= 0]
            nb[valid] = nb_ids[nb_ids >= 0]
            adj[:, k] = nb
        self.adj_padded = adj
        self.neighbor_lists: List[List[int]] = [
            [int(v) for v in row if v != pad] for row in adj
        ]
        # CSR form for scipy's BFS/shortest-path routines.
        src = np.repeat(np.arange(n, dtype=np.int32), 4)
        dst = adj.ravel()
        keep = dst != pad
        data = np.ones(int(keep.sum()), dtype=np.int8)
        self._csr = sp.csr_matrix(
            (data, (src[keep], dst[keep])), shape=(n, n)
        )

    # -- coordinate helpers ------------------------------------------------

    def vertex_at(self, x: int, y: int) -> int:
        """Vertex id at column x, row y; raises InvalidVertex if blocked/out of range."""
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise InvalidVertex(f"({x}, {y}) out of bounds")
        v = int(self.vertex_ids[y, x])
        if v < 0:
            raise InvalidVertex(f"({x}, {y}) is blocked")
        return v

    def coords_of(self, v: int) -> tuple:
        """(x, y) = (column, row) of vertex v."""
        self._check_vertex(v)
        return int(self._cols[v]), int(self._rows[v])

    def neighbors(self, v: int) -> List[int]:
        self._check_vertex(v)
        return self.neighbor_lists[v]

    def _check_vertex(self, v: int) -> None:
        if not (0 <= v < self.num_vertices):
            raise InvalidVertex(f"vertex {v} not in [0, {self.num_vertices})")

    # -- distances ----------------------------------------------------------

    def distance_table(self, source: int) -> "DistanceTable":
        """Cached BFS table from ``source`` (lazily built, kept for the map's lifetime)."""
        table = self._dist_cache.get(source)
        if table is not None:
            return table
        table = bfs_distance(self, source)
        with self._cache_lock:
            return self._dist_cache.setdefault(source, table)

    def largest_component(self) -> np.ndarray:
        """Sorted vertex ids of the largest connected component."""
        from scipy.sparse.csgraph import connected_components

        if self.num_vertices == 0:
            return np.empty(0, dtype=np.int32)
        ncomp, labels = connected_components(self._csr, directed=False)
        sizes = np.bincount(labels, minlength=ncomp)
        return np.where(labels == int(np.argmax(sizes)))[0].astype(np.int32)


class DistanceTable:
    """Single-source unweighted shortest-path distances with canonical parents.

    ``dist[v]`` is the hop count from ``source`` to v, UNREACHABLE (-1) when no
    path exists. The parent of v is the lowest-id neighbor at distance
    dist[v] - 1, which makes the extracted shortest path deterministic.
    """

    __slots__ = ("grid", "source", "dist", "_parent", "_path_cache", "_dist_list")

    def __init__(self, grid: GridMap, source: int, dist: np.ndarray):
        self.grid = grid
        self.source = source
        self.dist = dist
        self._parent: Optional[np.ndarray] = None
        self._path_cache: Dict[int, List[int]] = {}
        self._dist_list: Optional[List[int]] = None  # lazy list form for hot loops

    @property
    def parent(self) -> np.ndarray:
        """Predecessor array toward source (lowest-id rule), built on first use."""
        if self._parent is None:
            grid = self.grid
            n = grid.num_vertices
            pad = n
            nbdist = np.concatenate([self.dist, [np.int32(-2)]])[grid.adj_padded]
            want = self.dist[:, None] - 1
            ok = (nbdist == want) & (grid.adj_padded != pad)
            cand = np.where(ok, grid.adj_padded, pad)
            parent = cand.min(axis=1).astype(np.int32)
            parent[parent == pad] = UNREACHABLE
            parent[self.source] = UNREACHABLE
            parent[self.dist == UNREACHABLE] = UNREACHABLE
            self._parent = parent
        return self._parent


def parse_map(text: str) -> GridMap:
    """Parse a MovingAI .map document into a GridMap.

    Expected layout: ``type octile`` / ``height H`` / ``width W`` / ``map``
    followed by H rows of exactly W cells. '.', 'G', 'S' are passable;
    '@', 'O', 'T', 'W' are blocked.
    """
    lines = text.splitlines()
    if len(lines) < 4:
        raise MalformedHeader("expected 4 header lines (type/height/width/map)")
    if not lines[0].strip().startswith("type"):
        raise MalformedHeader(f"first line must declare the map type, got {lines[0]!r}")

    def _int_field(line: str, name: str) -> int:
        parts = line.split()
        if len(parts) != 2 or parts[0] != name:
            raise MalformedHeader(f"expected '{name} <int>', got {line!r}")
        try:
            value = int(parts[1])
        except ValueError:
            raise MalformedHeader(f"expected '{name} <int>', got {line!r}") from None
        if value <= 0:
            raise MalformedHeader(f"{name} must be positive, got {value}")
        return value

    height = _int_field(lines[1], "height")
    width = _int_field(lines[2], "width")
    if lines[3].strip() != "map":
        raise MalformedHeader(f"expected 'map' on line 4, got {lines[3]!r}")

    rows = [ln for ln in lines[4:] if ln != ""]
    if len(rows) != height:
        raise DimensionMismatch(f"header says {height} rows, found {len(rows)}")
    passable = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DimensionMismatch(
                f"row {r} has {len(row)} cells, header says {width}"
            )
        for c, ch in enumerate(row):
            if ch in PASSABLE_CHARS:
                passable[r, c] = True
            elif ch in BLOCKED_CHARS:
                passable[r, c] = False
            else:
                raise UnknownCell(ch, r, c)
    return GridMap(passable)


def bfs_distance(grid: GridMap, source: int) -> DistanceTable:
    """Exact single-source BFS distances over the 4-neighborhood."""
    grid._check_vertex(source)
    if grid.num_vertices == 1:
        return DistanceTable(grid, source, np.zeros(1, dtype=np.int32))
    raw = dijkstra(grid._csr, directed=False, indices=source, unweighted=True)
    dist = np.where(np.isinf(raw), UNREACHABLE, raw).astype(np.int32)
    return DistanceTable(grid, source, dist)


def canonical_shortest_path(table: DistanceTable, frm: int) -> List[int]:
    """Deterministic shortest path from ``frm`` to ``table.source``.

    Follows lowest-id predecessors, so the result has exactly dist+1 vertices
    and is stable across runs for a fixed map.
    """
    grid = table.grid
    grid._check_vertex(frm)
    d = int(table.dist[frm])
    if d == UNREACHABLE:
        raise Unreachable(f"vertex {frm} cannot reach {table.source}")
    cached = table._path_cache.get(frm)
    if cached is not None:
        return cached
    dist = table.dist
    path = [frm]
    v = frm
    while v != table.source:
        dv = dist[v]
        best = -1
        for u in grid.neighbor_lists[v]:
            if dist[u] == dv - 1:
                best = u
                break  # neighbor lists are ascending, first hit is the lowest id
        path.append(best)
        v = best
    table._path_cache[frm] = path
    return path


def format_map(passable_rows: Iterable[str]) -> str:
    """Assemble MovingAI .map text from pre-rendered cell rows."""
    rows = list(passable_rows)
    height = len(rows)
    width = len(rows[0]) if rows else 0
    head = ["type octile", f"height {height}", f"width {width}", "map"]
    return "\n".join(head + rows) + "\n"
