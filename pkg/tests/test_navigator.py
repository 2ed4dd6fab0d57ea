import math

import numpy as np
import pytest

from hybridnav.kinematics import Pose, VelocityCommand
from hybridnav.navigator import Mode, NavConfig, Navigator, NavThresholds
from hybridnav.world import (
    OCCUPIED,
    OccupancyGrid,
    RangeScan,
    ScanSpec,
    raycast_scan,
)


def arena(size=60, resolution=0.1):
    """Fully-known free square with a solid border."""
    inner = size - 2
    lines = ["#" * size] + ["#" + "." * inner + "#"] * inner + ["#" * size]
    return OccupancyGrid.from_ascii(lines, resolution)


def spec(beams=72, max_range=3.0):
    return ScanSpec(fov=2 * math.pi, beam_count=beams, max_range=max_range)


def clear_scan(beams=72, max_range=3.0):
    s = spec(beams, max_range)
    return RangeScan(ranges=np.full(beams, max_range), spec=s)


def make_nav(grid, goal, **cfg_kw):
    config = NavConfig(**cfg_kw)
    return Navigator(grid, config, goal)


class TestPlanAndCommit:
    def test_initial_commit_starts_at_robot(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 5.0))
        pose = Pose(1.0, 1.0, 0.0)
        nav.plan_and_commit(pose)
        assert nav.mode == Mode.TRACKING
        s = nav.traj.sample(0.0)
        assert math.hypot(s.ref.x - pose.x, s.ref.y - pose.y) < 0.15

    def test_goal_inside_wall_fails(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.95, 5.95))  # border wall
        nav.plan_and_commit(Pose(1.0, 1.0, 0.0))
        assert nav.mode == Mode.FAILED
        assert nav.fail_reason == "GoalBlocked"

    def test_replan_after_map_update_avoids_new_wall(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 3.0))
        pose = Pose(1.0, 3.0, 0.0)
        nav.plan_and_commit(pose)
        first = list(zip(nav.plan.xs, nav.plan.ys))
        assert any(abs(x - 3.0) < 0.1 for x, _ in first)  # crosses x = 3
        # a wall stub appears across the corridor, in the belief grid
        col = int(3.0 / grid.resolution)
        grid.states[1:41, col] = OCCUPIED
        grid.log_odds[1:41, col] = 5.0
        nav.plan_and_commit(pose)
        assert nav.mode == Mode.TRACKING
        blocked_hits = [
            (x, y) for x, y in zip(nav.plan.xs, nav.plan.ys)
            if abs(x - 3.05) < 0.06 and y < 4.1
        ]
        assert not blocked_hits  # re-plan routes above the new wall stub


class TestStep:
    def test_nominal_tick_tracks(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 1.0))
        nav.plan_and_commit(Pose(1.0, 1.0, 0.0))
        dt = 0.05
        # place the robot exactly on the reference for the next tick
        ref = nav.traj.sample(dt).ref
        result = nav.step(Pose(ref.x, ref.y, ref.theta), clear_scan(), dt)
        assert result.mode == Mode.TRACKING
        assert result.error.planar_norm() < 1e-12
        assert result.command.v >= 0.0
        assert not result.events

    def test_obstacle_inside_d_near_flips_to_avoiding(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 1.0))
        pose = Pose(1.0, 1.0, 0.0)
        nav.plan_and_commit(pose)
        ranges = np.full(72, 3.0)
        ranges[0] = 0.4  # 0.4 m dead ahead, below d_near = 0.6
        scan = RangeScan(ranges=ranges, spec=spec())
        result = nav.step(pose, scan, 0.05)
        assert result.mode == Mode.AVOIDING
        assert "AVOID_ENTER" in result.events

    def test_avoid_exit_requires_hysteresis(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 1.0))
        pose = Pose(1.0, 1.0, 0.0)
        nav.plan_and_commit(pose)
        near = np.full(72, 3.0)
        near[0] = 0.4
        nav.step(pose, RangeScan(ranges=near, spec=spec()), 0.05)
        assert nav.mode == Mode.AVOIDING
        # just above d_near but inside the hysteresis band: stay avoiding
        mid = np.full(72, 3.0)
        mid[0] = 0.7
        result = nav.step(pose, RangeScan(ranges=mid, spec=spec()), 0.05)
        assert result.mode == Mode.AVOIDING
        clear = np.full(72, 3.0)
        result = nav.step(pose, RangeScan(ranges=clear, spec=spec()), 0.05)
        assert result.mode == Mode.TRACKING
        assert "AVOID_EXIT" in result.events

    def test_arrival_checked_first(self):
        grid = arena()
        goal = Pose(1.0, 1.0)
        nav = make_nav(grid, goal)
        nav.plan_and_commit(Pose(1.0, 1.0, 0.0))
        ranges = np.full(72, 3.0)
        ranges[0] = 0.3  # obstacle near, but the robot is at the goal
        result = nav.step(Pose(1.05, 1.0, 0.0),
                          RangeScan(ranges=ranges, spec=spec()), 0.05)
        assert result.mode == Mode.ARRIVED
        assert result.command == VelocityCommand(0.0, 0.0)

    def test_error_above_threshold_triggers_replan(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 1.0))
        nav.plan_and_commit(Pose(1.0, 1.0, 0.0))
        # a pose far off the reference
        result = nav.step(Pose(1.0, 2.5, 0.0), clear_scan(), 0.05)
        assert result.mode == Mode.REPLANNING
        assert any(e.startswith("REPLAN(error)") for e in result.events)
        assert result.command == VelocityCommand(0.0, 0.0)
        assert nav.mode == Mode.TRACKING  # fresh plan committed

    def test_overrun_forces_replan(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 1.0))
        nav.plan_and_commit(Pose(1.0, 1.0, 0.0))
        nav.t_traj = nav.traj.t_f + nav.config.thresholds.t_overrun_max + 1.0
        # robot stuck mid-course while the trajectory clock ran out
        pose = Pose(*nav.traj.sample(nav.traj.t_f / 2).ref.position(), 0.0)
        result = nav.step(pose, clear_scan(), 0.05)
        assert any(e.startswith("REPLAN(overrun)") for e in result.events)

    def test_one_command_per_tick_within_limits(self):
        grid = arena()
        nav = make_nav(grid, Pose(5.0, 5.0))
        pose = Pose(1.0, 1.0, 0.0)
        nav.plan_and_commit(pose)
        rng = np.random.default_rng(3)
        from hybridnav.kinematics import integrate_unicycle

        for _ in range(200):
            scan = raycast_scan(pose, grid, spec())
            result = nav.step(pose, scan, 0.05)
            assert abs(result.command.v) <= nav.config.v_max + 1e-12
            assert abs(result.command.omega) <= nav.config.omega_max + 1e-12
            pose = integrate_unicycle(pose, result.command, 0.05)
            if nav.mode == Mode.ARRIVED:
                break

    def test_vfh_only_mode_has_no_plan(self):
        grid = arena()
        nav = make_nav(grid, Pose(3.0, 1.0), policy="vfh-only")
        assert nav.mode == Mode.AVOIDING
        pose = Pose(1.0, 1.0, 0.0)
        result = nav.step(pose, clear_scan(), 0.05)
        assert result.mode == Mode.AVOIDING
        assert result.command.v == nav.config.vfh.v_const
        assert nav.traj is None


class TestModeTransitions:
    ALLOWED = {
        (Mode.TRACKING, Mode.AVOIDING),
        (Mode.AVOIDING, Mode.TRACKING),
        (Mode.TRACKING, Mode.REPLANNING),
        (Mode.AVOIDING, Mode.REPLANNING),
        (Mode.REPLANNING, Mode.TRACKING),
        (Mode.REPLANNING, Mode.REPLANNING),
        (Mode.REPLANNING, Mode.FAILED),
        (Mode.TRACKING, Mode.ARRIVED),
        (Mode.AVOIDING, Mode.ARRIVED),
        (Mode.REPLANNING, Mode.ARRIVED),
    }

    def test_transition_graph(self, run_cache):
        _, trace, _ = run_cache("popup")
        modes = [Mode(r.mode) for r in trace.records]
        for prev, nxt in zip(modes, modes[1:]):
            if prev != nxt:
                assert (prev, nxt) in self.ALLOWED, f"{prev} -> {nxt}"

    def test_replan_reasons_are_exhaustive(self, run_cache):
        for name in ("popup", "blocking"):
            _, trace, _ = run_cache(name)
            for record in trace.records:
                for event in record.events:
                    if event.startswith("REPLAN("):
                        reason = event[len("REPLAN("):-1]
                        assert reason in ("error", "no_valley", "overrun")
