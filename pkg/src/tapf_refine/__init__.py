"""Anytime target assignment and pathfinding (TAPF) on 4-connected grids."""

from .grid import DistanceTable, GridMap, bfs_distance, canonical_shortest_path, parse_map
from .instance import ScenarioConfig, TapfInstance, check_feasibility, generate_scenario
from .mapf import Solution, effective_cost, solve_mapf, solve_mapf_anytime, verify_solution
from .matching import Assignment, CostMatrix, assignment_lower_bound, hungarian, initial_assignment
from .refine import IterationRecord, RefineConfig, improvement_rate, refine

__all__ = [
    "Assignment",
    "CostMatrix",
    "DistanceTable",
    "GridMap",
    "IterationRecord",
    "RefineConfig",
    "ScenarioConfig",
    "Solution",
    "TapfInstance",
    "assignment_lower_bound",
    "bfs_distance",
    "canonical_shortest_path",
    "check_feasibility",
    "effective_cost",
    "generate_scenario",
    "hungarian",
    "improvement_rate",
    "initial_assignment",
    "parse_map",
    "refine",
    "solve_mapf",
    "solve_mapf_anytime",
    "verify_solution",
]
