import math

import numpy as np
import pytest

from hybridnav.planner import (
    SQRT2,
    GoalBlocked,
    NoPath,
    StartBlocked,
    PathPlan,
    path_length,
    plan_astar,
)
from hybridnav.world import OccupancyGrid, inflate

from oracles import dijkstra_cost, octile_cost, steps_cost


def free_grid(size, resolution=1.0):
    return OccupancyGrid.from_ascii(["." * size] * size, resolution)


def mask_of(grid):
    return inflate(grid, 0.0)


def random_mask(rng, size, density):
    return rng.random((size, size)) < density


class TestPlanAstar:
    def test_start_equals_goal(self):
        grid = free_grid(5)
        plan = plan_astar(grid, mask_of(grid), (2.5, 2.5), (2.5, 2.5))
        assert plan.n == 1
        assert plan.cells == [(2, 2)]

    def test_empty_grid_pure_diagonal(self):
        grid = free_grid(5)
        plan = plan_astar(grid, mask_of(grid), (0.5, 0.5), (4.5, 4.5))
        assert octile_cost(plan.cells) == pytest.approx(4 * SQRT2)
        assert plan.n == 5

    def test_start_goal_blocked(self):
        grid = free_grid(5)
        mask = mask_of(grid)
        mask[0, 0] = True
        with pytest.raises(StartBlocked):
            plan_astar(grid, mask, (0.5, 0.5), (4.5, 4.5))
        with pytest.raises(GoalBlocked):
            plan_astar(grid, mask, (4.5, 4.5), (0.5, 0.5))

    def test_no_path(self):
        grid = OccupancyGrid.from_ascii([
            ".....",
            "#####",
            ".....",
            ".....",
            ".....",
        ], 1.0)
        with pytest.raises(NoPath):
            plan_astar(grid, mask_of(grid), (0.5, 0.5), (0.5, 4.5))

    def test_no_corner_cutting(self):
        # the diagonal between two blocked orthogonals is not allowed
        grid = OccupancyGrid.from_ascii([
            "...",
            ".#.",
            "#..",
        ], 1.0)
        plan = plan_astar(grid, mask_of(grid), (1.5, 0.5), (0.5, 1.5))
        for (c0, r0), (c1, r1) in zip(plan.cells, plan.cells[1:]):
            if abs(c1 - c0) == 1 and abs(r1 - r0) == 1:
                mask = mask_of(grid)
                assert not mask[r0, c1] and not mask[r1, c0]
        assert plan.n > 2  # forced around, not through the pinch

    def test_matches_dijkstra_on_random_grids(self):
        rng = np.random.default_rng(101)
        grid = free_grid(20)
        agreements = 0
        for _ in range(100):
            mask = random_mask(rng, 20, 0.25)
            mask[0, 0] = False
            mask[19, 19] = False
            oracle = dijkstra_cost(mask, (0, 0), (19, 19))
            try:
                plan = plan_astar(grid, mask, (0.5, 0.5), (19.5, 19.5))
            except NoPath:
                assert oracle is None
                continue
            assert oracle is not None
            assert octile_cost(plan.cells) == steps_cost(oracle)
            agreements += 1
        assert agreements > 20  # sanity: a fair share of solvable instances

    def test_cost_symmetry(self):
        rng = np.random.default_rng(55)
        grid = free_grid(15)
        for _ in range(30):
            mask = random_mask(rng, 15, 0.2)
            mask[0, 0] = False
            mask[14, 14] = False
            try:
                fwd = plan_astar(grid, mask, (0.5, 0.5), (14.5, 14.5))
                back = plan_astar(grid, mask, (14.5, 14.5), (0.5, 0.5))
            except NoPath:
                continue
            assert octile_cost(fwd.cells) == octile_cost(back.cells)

    def test_via_points_adjacency_and_collision(self):
        rng = np.random.default_rng(77)
        grid = free_grid(20, resolution=0.1)
        step_limit = 0.1 * SQRT2 + 1e-9
        for _ in range(20):
            mask = random_mask(rng, 20, 0.25)
            mask[0, 0] = False
            mask[19, 19] = False
            try:
                plan = plan_astar(grid, mask, (0.05, 0.05), (1.95, 1.95))
            except NoPath:
                continue
            for col, row in plan.cells:
                assert not mask[row, col]
            dx = np.diff(plan.xs)
            dy = np.diff(plan.ys)
            assert np.all(np.hypot(dx, dy) <= step_limit)

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        grid = free_grid(20)
        mask = random_mask(rng, 20, 0.2)
        mask[0, 0] = False
        mask[19, 19] = False
        a = plan_astar(grid, mask, (0.5, 0.5), (19.5, 19.5))
        b = plan_astar(grid, mask, (0.5, 0.5), (19.5, 19.5))
        assert a.cells == b.cells


class TestPathLength:
    def test_single_point(self):
        plan = PathPlan(xs=np.array([1.0]), ys=np.array([2.0]), cells=[(0, 0)])
        assert path_length(plan) == 0.0

    def test_pythagoras(self):
        plan = PathPlan(xs=np.array([0.0, 3.0]), ys=np.array([0.0, 4.0]),
                        cells=[(0, 0), (1, 1)])
        assert path_length(plan) == pytest.approx(5.0)

    def test_matches_brute_force_sum(self):
        rng = np.random.default_rng(9)
        xs = rng.uniform(-5, 5, 30)
        ys = rng.uniform(-5, 5, 30)
        plan = PathPlan(xs=xs, ys=ys, cells=[(0, 0)] * 30)
        total = sum(math.hypot(xs[i + 1] - xs[i], ys[i + 1] - ys[i])
                    for i in range(29))
        assert path_length(plan) == pytest.approx(total, rel=1e-12)
