"""Synthetic benchmark-style maps in MovingAI .map text form.

The benchmark harness and tests need maps shaped like the common MAPF suites
(uniform random obstacles, warehouse shelving). These builders emit .map text
so everything still flows through ``grid.parse_map``.
"""

from __future__ import annotations

import numpy as np

from .grid import GridMap, format_map


def empty_map(width: int, height: int) -> str:
    return format_map(["." * width] * height)


def random_map(
    width: int,
    height: int,
    obstacle_density: float = 0.2,
    seed: int = 0,
    keep_largest_component: bool = True,
) -> str:
    """Uniform random obstacles (random-64-64-20 style).

    With ``keep_largest_component`` the passable pockets cut off from the main
    region are filled in, so every passable cell can reach every other one.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, width, height]))
    passable = rng.random((height, width)) >= obstacle_density
    if keep_largest_component and passable.any():
        grid = GridMap(passable)
        keep = grid.largest_component()
        mask = np.zeros_like(passable)
        rows = grid._rows[keep]
        cols = grid._cols[keep]
        mask[rows, cols] = True
        passable = mask
    return format_map(
        ["".join("." if passable[r, c] else "@" for c in range(width)) for r in range(height)]
    )


def warehouse_map(
    shelf_cols: int = 20,
    shelf_rows: int = 40,
    shelf_width: int = 10,
    shelf_height: int = 2,
    aisle: int = 2,
    margin: int = 4,
) -> str:
    """Warehouse shelving pattern: a grid of blocked shelf slabs with aisles.

    Defaults give a map in the same size class as the large warehouse
    benchmarks (~340 x 170, tens of thousands of passable cells).
    """
    width = 2 * margin + shelf_cols * shelf_width + (shelf_cols - 1) * aisle
    height = 2 * margin + shelf_rows * shelf_height + (shelf_rows - 1) * aisle
    passable = np.ones((height, width), dtype=bool)
    for i in range(shelf_rows):
        r0 = margin + i * (shelf_height + aisle)
        for j in range(shelf_cols):
            c0 = margin + j * (shelf_width + aisle)
            passable[r0 : r0 + shelf_height, c0 : c0 + shelf_width] = False
    return format_map(
        ["".join("." if passable[r, c] else "@" for c in range(width)) for r in range(height)]
    )
