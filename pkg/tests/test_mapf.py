import numpy as np
import pytest

from tapf_refine.grid import bfs_distance, canonical_shortest_path, parse_map
from tapf_refine.mapf import (
    GoalMismatch,
    Solution,
    effective_cost,
    make_solution,
    read_solution,
    solve_mapf,
    solve_mapf_anytime,
    verify_solution,
    write_solution,
)
from tapf_refine.matching import Assignment, initial_assignment
from tapf_refine.mapgen import empty_map, random_map

from conftest import make_instance, random_instance
from oracles import joint_optimal_flowtime


def test_effective_cost_examples():
    assert effective_cost([7], 7) == 0
    assert effective_cost([1, 7, 7, 7], 7) == 1
    assert effective_cost([1, 7, 1, 7], 7) == 3
    with pytest.raises(GoalMismatch):
        effective_cost([1, 2], 7)


def test_single_agent_shortest_path():
    grid = parse_map(random_map(12, 12, 0.2, seed=9))
    start, goal = 0, grid.num_vertices - 1
    inst = make_instance(grid, [grid.coords_of(start)], [[grid.coords_of(goal)]])
    asg = Assignment([goal])
    sol = solve_mapf(inst, asg)
    assert sol is not None
    expect = int(bfs_distance(grid, start).dist[goal])
    assert sol.flowtime == expect
    table = grid.distance_table(goal)
    assert sol.paths[0] == canonical_shortest_path(table, start)


def test_two_agent_swap_with_branch():
    # corridor with one side branch: the only way to swap is to use it
    text = "type octile\nheight 2\nwidth 4\nmap\n....\n@.@@\n"
    grid = parse_map(text)
    a, b = grid.vertex_at(0, 0), grid.vertex_at(3, 0)
    inst = make_instance(grid, [(0, 0), (3, 0)], [[(3, 0)], [(0, 0)]])
    asg = Assignment([b, a])
    assert joint_optimal_flowtime(grid, [a, b], [b, a]) is not None
    sol = solve_mapf(inst, asg)
    assert sol is not None
    assert verify_solution(inst, asg, sol) == []


def test_unsolvable_corridor_times_out():
    grid = parse_map(empty_map(4, 1))
    a, b = grid.vertex_at(0, 0), grid.vertex_at(3, 0)
    inst = make_instance(grid, [(0, 0), (3, 0)], [[(3, 0)], [(0, 0)]])
    asg = Assignment([b, a])
    assert joint_optimal_flowtime(grid, [a, b], [b, a]) is None
    assert solve_mapf(inst, asg, deadline=0.1) is None


def test_solver_deterministic():
    inst = random_instance(5, max_agents=6)
    asg = initial_assignment(inst)
    s1 = solve_mapf(inst, asg)
    s2 = solve_mapf(inst, asg)
    assert s1 is not None and s2 is not None
    assert s1.paths == s2.paths and s1.flowtime == s2.flowtime


def test_flowtime_dominates_assigned_distance():
    for seed in range(8):
        inst = random_instance(seed, max_agents=6)
        asg = initial_assignment(inst)
        sol = solve_mapf(inst, asg)
        assert sol is not None
        lower = sum(inst.target_dist[i][asg.target_of[i]] for i in range(inst.n))
        assert sol.flowtime >= lower
        assert sol.normalized_cost >= 1.0


def test_solutions_always_verify():
    for seed in range(15):
        inst = random_instance(seed)
        asg = initial_assignment(inst)
        sol = solve_mapf(inst, asg)
        assert sol is not None
        assert verify_solution(inst, asg, sol) == []


def test_anytime_never_worse_than_first():
    inst = random_instance(3, max_agents=5)
    asg = initial_assignment(inst)
    first = solve_mapf(inst, asg)
    best = solve_mapf_anytime(inst, asg, deadline=0.5, rng=np.random.default_rng(1))
    assert best is not None and first is not None
    assert best.flowtime <= first.flowtime


def test_anytime_near_optimal_on_micro_instance():
    # 4x4, 3 agents, generous budget: within 1.5x of the exact optimum
    rng = np.random.default_rng(31)
    checked = 0
    for seed in range(40):
        if checked >= 5:
            break
        grid = parse_map(random_map(4, 4, 0.15, seed=2000 + seed))
        if grid.num_vertices < 8:
            continue
        cells = rng.choice(grid.num_vertices, size=6, replace=False)
        starts, goals = cells[:3].tolist(), cells[3:].tolist()
        opt = joint_optimal_flowtime(grid, starts, goals)
        if opt is None or opt == 0:
            continue
        inst = make_instance(
            grid,
            [grid.coords_of(s) for s in starts],
            [[grid.coords_of(g)] for g in goals],
        )
        asg = Assignment(goals)
        sol = solve_mapf_anytime(
            inst, asg, deadline=0.5, rng=np.random.default_rng(seed)
        )
        assert sol is not None
        assert sol.flowtime <= 1.5 * opt
        checked += 1
    assert checked >= 5


def test_anytime_single_budget_equals_solve():
    inst = random_instance(4, max_agents=4)
    asg = initial_assignment(inst)
    base = solve_mapf(inst, asg)
    one = solve_mapf_anytime(inst, asg, deadline=1e-9, rng=np.random.default_rng(1))
    assert one is not None and one.flowtime == base.flowtime


def test_verifier_reports_vertex_conflict(empty5):
    g = empty5
    inst = make_instance(g, [(0, 0), (2, 0)], [[(2, 2)], [(0, 2)]])
    ga, gb = g.vertex_at(2, 2), g.vertex_at(0, 2)
    asg = Assignment([ga, gb])
    sol = make_solution(
        inst, asg,
        [[g.vertex_at(0, 0), g.vertex_at(0, 1), g.vertex_at(1, 1),
          g.vertex_at(2, 1), ga],
         [g.vertex_at(2, 0), g.vertex_at(1, 0), g.vertex_at(1, 1),
          g.vertex_at(0, 1), gb]],
    )
    hits = [v for v in verify_solution(inst, asg, sol) if v.kind == "VertexConflict"]
    assert hits and hits[0].t == 2 and hits[0].agents == (0, 1)


def test_verifier_reports_edge_conflict(empty5):
    g = empty5
    inst = make_instance(g, [(0, 0), (1, 0)], [[(2, 2)], [(0, 2)]])
    ga, gb = g.vertex_at(2, 2), g.vertex_at(0, 2)
    asg = Assignment([ga, gb])
    sol = make_solution(
        inst, asg,
        [[g.vertex_at(0, 0), g.vertex_at(1, 0), g.vertex_at(2, 0),
          g.vertex_at(2, 1), ga],
         [g.vertex_at(1, 0), g.vertex_at(0, 0), g.vertex_at(0, 1), gb]],
    )
    hits = [v for v in verify_solution(inst, asg, sol) if v.kind == "EdgeConflict"]
    assert hits and hits[0].t == 0 and hits[0].agents == (0, 1)


def test_verifier_wrong_goal(empty5):
    g = empty5
    inst = make_instance(g, [(0, 0)], [[(2, 0), (3, 0)]])
    asg = Assignment([g.vertex_at(2, 0)])
    bad = Solution(
        paths=[[g.vertex_at(0, 0), g.vertex_at(1, 0)]], flowtime=1,
        normalized_cost=1.0, costs=[1],
    )
    kinds = {v.kind for v in verify_solution(inst, asg, bad)}
    assert "WrongGoal" in kinds


def test_verifier_accepts_hand_built(empty5):
    g = empty5
    inst = make_instance(g, [(0, 0)], [[(3, 0)]])
    asg = Assignment([g.vertex_at(3, 0)])
    path = [g.vertex_at(x, 0) for x in range(4)]
    sol = make_solution(inst, asg, [path])
    assert verify_solution(inst, asg, sol) == []
    assert sol.flowtime == 3


def test_solve_matches_joint_oracle_on_micro_instances():
    rng = np.random.default_rng(2024)
    solved = 0
    for seed in range(30):
        grid = parse_map(random_map(4, 4, 0.2, seed=seed))
        n = int(rng.integers(1, 4))
        if grid.num_vertices < 2 * n:
            continue
        cells = rng.choice(grid.num_vertices, size=2 * n, replace=False)
        starts, goals = cells[:n].tolist(), cells[n:].tolist()
        opt = joint_optimal_flowtime(grid, starts, goals)
        if opt is None:
            continue
        inst = make_instance(
            grid,
            [grid.coords_of(s) for s in starts],
            [[grid.coords_of(t)] for t in goals],
        )
        asg = Assignment(goals)
        sol = solve_mapf(inst, asg, max_nodes=200_000)
        assert sol is not None, f"seed {seed}: oracle solvable but engine failed"
        assert verify_solution(inst, asg, sol) == []
        assert sol.flowtime >= opt
        solved += 1
    assert solved >= 10


def test_solution_file_round_trip(tmp_path, empty5):
    g = empty5
    inst = make_instance(g, [(0, 0), (4, 4)], [[(2, 0)], [(2, 4)]])
    asg = Assignment([g.vertex_at(2, 0), g.vertex_at(2, 4)])
    sol = solve_mapf(inst, asg)
    path = tmp_path / "sol.txt"
    write_solution(str(path), inst, sol)
    paths, flowtime, normalized = read_solution(str(path), g)
    assert paths == sol.paths
    assert flowtime == sol.flowtime
    assert abs(normalized - sol.normalized_cost) < 1e-6
