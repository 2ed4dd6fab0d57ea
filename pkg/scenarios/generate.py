#!/usr/bin/env python3
"""Regenerate the bundled scenario maps and JSON files.

Deterministic; run from the repository root:  python3 scenarios/generate.py
"""

import json
import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
MAPS = HERE / "maps"

RES = 0.05
SIZE_M = 8.0
CELLS = int(SIZE_M / RES)
BORDER = 0.2


def blank_arena():
    """Free 8x8 m arena with a 0.2 m border wall."""
    grid = np.zeros((CELLS, CELLS), dtype=np.int8)  # [row, col], 0 = free
    add_rect(grid, 0.0, 0.0, SIZE_M, BORDER)
    add_rect(grid, 0.0, SIZE_M - BORDER, SIZE_M, SIZE_M)
    add_rect(grid, 0.0, 0.0, BORDER, SIZE_M)
    add_rect(grid, SIZE_M - BORDER, 0.0, SIZE_M, SIZE_M)
    return grid


def add_rect(grid, x0, y0, x1, y1):
    """Occupy every cell whose center falls inside [x0,x1] x [y0,y1]."""
    for row in range(CELLS):
        cy = (row + 0.5) * RES
        if not (y0 <= cy <= y1):
            continue
        for col in range(CELLS):
            cx = (col + 0.5) * RES
            if x0 <= cx <= x1:
                grid[row, col] = 1


def save_map(grid, name):
    MAPS.mkdir(parents=True, exist_ok=True)
    lines = []
    for row in range(CELLS - 1, -1, -1):
        lines.append("".join("#" if grid[row, col] else "."
                             for col in range(CELLS)))
    path = MAPS / f"{name}.ogrid"
    with open(path, "w") as fh:
        fh.write(f"ogrid v1 {CELLS} {CELLS} {RES!r} 0.0 0.0\n")
        fh.write("\n".join(lines) + "\n")
    return path


def base_nav(**overrides):
    nav = {
        "gains": {"k1": 1.0, "k2": 4.0, "k3": 2.0},
        "v_max": 0.5,
        "omega_max": 1.5,
        "time_scale": 4.0,
        "robot_radius": 0.15,
        "inflation_radius": 0.4,
        "thresholds": {
            "e_replan": 0.5, "d_near": 0.6, "hysteresis": 0.2,
            "r_goal": 0.15, "t_overrun_max": 10.0, "n_fail": 3,
        },
        "vfh": {
            "sectors": 72, "threshold": 1.0, "s_max": 4,
            "v_const": 0.2, "active_window": 1.5,
            "enlargement_radius": 0.25,
            "iir_a1": 0.7, "iir_b0": 0.3,
        },
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(nav.get(key), dict):
            nav[key].update(value)
        else:
            nav[key] = value
    return nav


def scenario(name, map_name, start, goal, nav, obstacles=(), max_ticks=1600,
             seed=7, beam_count=360, max_range=3.5):
    return {
        "name": name,
        "map": {"file": f"maps/{map_name}.ogrid"},
        "robot_start": list(start),
        "goal": list(goal),
        "scan": {"fov_deg": 270, "beam_count": beam_count, "max_range": max_range},
        "nav": nav,
        "obstacles": list(obstacles),
        "sim": {"tick_dt": 0.05, "max_ticks": max_ticks, "seed": seed},
    }


def write(name, payload):
    path = HERE / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    print("wrote", path)


def main():
    # U-shaped course: one dead end to the other around a central wall
    grid = blank_arena()
    add_rect(grid, 0.0, 3.9, 5.5, 4.1)
    save_map(grid, "static_u")
    write("static_u", scenario(
        "static_u", "static_u",
        start=(1.2, 2.0, 0.0), goal=(1.2, 6.0, math.pi),
        nav=base_nav(time_scale=8.0, inflation_radius=0.8,
                     thresholds={"d_near": 0.5}),
        max_ticks=1400,
    ))

    # open arena with an obstacle that pops up on the path after mapping
    grid = blank_arena()
    save_map(grid, "open")
    write("popup", scenario(
        "popup", "open",
        start=(1.0, 4.0, 0.0), goal=(7.0, 4.0, 0.0),
        nav=base_nav(thresholds={"d_near": 0.7}),
        obstacles=[{
            "id": "popup", "radius": 0.3,
            "script": [[1.5, [4.0, 4.0]], [1e9, [4.0, 4.0]]],
        }],
        max_ticks=1600,
    ))

    # corridor sealed by a blocker shortly after the run starts; the only
    # way through afterwards is around the north side
    grid = blank_arena()
    add_rect(grid, 2.0, 3.2, 6.0, 3.4)
    add_rect(grid, 2.0, 4.6, 6.0, 4.8)
    save_map(grid, "corridor")
    write("blocking", scenario(
        "blocking", "corridor",
        start=(1.0, 4.0, 0.0), goal=(7.0, 4.0, 0.0),
        nav=base_nav(),
        obstacles=[{
            "id": "blocker", "radius": 0.5,
            "script": [[1.0, [2.7, 4.0]], [1e9, [2.7, 4.0]]],
        }],
        max_ticks=2400,
    ))

    # concave pocket between robot and goal: lethal for pure local planning
    grid = blank_arena()
    add_rect(grid, 2.0, 2.9, 5.0, 3.1)
    add_rect(grid, 2.0, 4.9, 5.0, 5.1)
    add_rect(grid, 4.8, 2.9, 5.0, 5.1)
    save_map(grid, "utrap")
    write("utrap", scenario(
        "utrap", "utrap",
        start=(1.2, 4.0, 0.0), goal=(6.5, 4.0, 0.0),
        nav=base_nav(time_scale=6.0, inflation_radius=0.5,
                     thresholds={"d_near": 0.4}),
        max_ticks=1200,
    ))

    # two staggered walls force an S-course with hairpin turns
    grid = blank_arena()
    add_rect(grid, 0.0, 2.9, 5.5, 3.1)
    add_rect(grid, 2.5, 4.9, 8.0, 5.1)
    save_map(grid, "hairpin")
    write("hairpin", scenario(
        "hairpin", "hairpin",
        start=(1.0, 1.5, 0.0), goal=(6.5, 6.5, 0.0),
        nav=base_nav(time_scale=5.0, inflation_radius=0.5,
                     thresholds={"d_near": 0.4}),
        max_ticks=2400,
    ))

    # unobstructed straight run, used for policy comparison sanity
    write("empty", scenario(
        "empty", "open",
        start=(1.5, 4.0, 0.0), goal=(6.5, 4.0, 0.0),
        nav=base_nav(time_scale=3.0),
        max_ticks=900,
    ))


if __name__ == "__main__":
    main()
