"""A* global path planning over an inflated occupancy grid.

8-connected moves with octile costs (1 straight, sqrt(2) diagonal) and the
octile-distance heuristic; diagonal moves are forbidden when either adjacent
orthogonal cell is blocked, so fitted trajectories cannot clip corners.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .world import OccupancyGrid

SQRT2 = math.sqrt(2.0)

# (dcol, drow, cell step cost)
_MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
)


class StartBlocked(ValueError):
    pass


class GoalBlocked(ValueError):
    pass


class NoPath(RuntimeError):
    pass


@dataclass
class PathPlan:
    """Via-point path: world coordinates plus the originating grid cells."""

    xs: np.ndarray
    ys: np.ndarray
    cells: list[tuple[int, int]]

    @property
    def n(self) -> int:
        return len(self.xs)

    def goal_xy(self) -> tuple[float, float]:
        return (float(self.xs[-1]), float(self.ys[-1]))


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def plan_astar(
    grid: OccupancyGrid,
    mask: np.ndarray,
    start: tuple[float, float],
    goal: tuple[float, float],
) -> PathPlan:
    """Minimum-cost 8-connected path from start to goal (world points).

    Ties on f prefer larger g (deeper nodes give straighter paths), then the
    smaller flat cell index, so planning is reproducible.
    """
    start_cell = grid.world_to_cell(start)
    goal_cell = grid.world_to_cell(goal)
    if mask[start_cell[1], start_cell[0]]:
        raise StartBlocked(f"start cell {start_cell} is blocked")
    if mask[goal_cell[1], goal_cell[0]]:
        raise GoalBlocked(f"goal cell {goal_cell} is blocked")
    if start_cell == goal_cell:
        return _to_plan(grid, [start_cell])

    width, height = grid.width, grid.height
    g_score: dict[tuple[int, int], float] = {start_cell: 0.0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    h0 = _octile(start_cell, goal_cell)
    open_heap = [(h0, 0.0, start_cell[1] * width + start_cell[0], start_cell)]
    closed: set[tuple[int, int]] = set()

    while open_heap:
        f, neg_g, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        if cell == goal_cell:
            return _to_plan(grid, _reconstruct(came_from, cell))
        closed.add(cell)
        g = -neg_g
        col, row = cell
        for dc, dr, step_cost in _MOVES:
            nc, nr = col + dc, row + dr
            if not (0 <= nc < width and 0 <= nr < height):
                continue
            if mask[nr, nc]:
                continue
            # no corner cutting: both orthogonal neighbors must be open
            if dc != 0 and dr != 0 and (mask[row, nc] or mask[nr, col]):
                continue
            tentative = g + step_cost
            neighbor = (nc, nr)
            if tentative < g_score.get(neighbor, math.inf):
                g_score[neighbor] = tentative
                came_from[neighbor] = cell
                heapq.heappush(
                    open_heap,
                    (tentative + _octile(neighbor, goal_cell), -tentative,
                     nr * width + nc, neighbor),
                )
    raise NoPath(f"goal cell {goal_cell} unreachable from {start_cell}")


def _reconstruct(came_from, cell):
    path = [cell]
    while cell in came_from:
        cell = came_from[cell]
        path.append(cell)
    path.reverse()
    return path


def _to_plan(grid: OccupancyGrid, cells: list[tuple[int, int]]) -> PathPlan:
    xs = np.empty(len(cells))
    ys = np.empty(len(cells))
    for i, cell in enumerate(cells):
        xs[i], ys[i] = grid.cell_center(cell)
    return PathPlan(xs=xs, ys=ys, cells=cells)


def path_length(plan: PathPlan) -> float:
    """Sum of consecutive via-point segment lengths."""
    if plan.n < 2:
        return 0.0
    return float(np.hypot(np.diff(plan.xs), np.diff(plan.ys)).sum())
