import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from tapf_refine import parse_map
from tapf_refine.instance import TapfInstance
from tapf_refine.mapgen import empty_map, random_map


@pytest.fixture
def empty5():
    return parse_map(empty_map(5, 5))


@pytest.fixture
def empty8():
    return parse_map(empty_map(8, 8))


def small_random_grid(seed: int, size: int = 12, density: float = 0.2):
    return parse_map(random_map(size, size, density, seed=seed))


def make_instance(grid, starts_xy, targets_xy):
    """Instance from (x, y) coordinate lists."""
    starts = [grid.vertex_at(x, y) for x, y in starts_xy]
    targets = [[grid.vertex_at(x, y) for x, y in tl] for tl in targets_xy]
    return TapfInstance(grid, starts, targets)


def random_instance(seed: int, max_agents: int = 8, size: int = 10):
    """Small random instance for fuzzing (feasible by generator contract)."""
    from tapf_refine.instance import ScenarioConfig, generate_scenario

    rng = np.random.default_rng(seed)
    grid = small_random_grid(seed, size=size)
    n = int(rng.integers(1, max_agents + 1))
    kind = "random" if rng.integers(2) == 0 else "hotspot"
    cfg = ScenarioConfig(
        kind=kind,
        targets_per_agent=int(rng.integers(2, 6)),
        distance_band=(1, size),
        seed=seed,
    )
    return generate_scenario(grid, min(n, grid.num_vertices // 3), cfg)
