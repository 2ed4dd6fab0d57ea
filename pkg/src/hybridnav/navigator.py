"""Tick executor: owns the TRACKING / AVOIDING / REPLANNING / ARRIVED /
FAILED mode machine, the trajectory clock, and re-planning triggers, and
emits exactly one velocity command per tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from . import planner, trajectory, vfh
from .kinematics import (
    EPS_VEL,
    ControlGains,
    DegenerateVelocity,
    Pose,
    TrackingError,
    VelocityCommand,
    control_law,
    desired_velocities,
    tracking_error,
    wrap_angle,
)
from .world import OccupancyGrid, RangeScan, inflate


class Mode(str, Enum):
    TRACKING = "TRACKING"
    AVOIDING = "AVOIDING"
    REPLANNING = "REPLANNING"
    ARRIVED = "ARRIVED"
    FAILED = "FAILED"


@dataclass
class NavThresholds:
    e_replan: float = 0.5  # planar tracking error that re-triggers planning [m]
    d_near: float = 0.6  # obstacle distance that triggers avoidance [m]
    hysteresis: float = 0.2  # extra clearance required to leave avoidance [m]
    r_goal: float = 0.15  # arrival radius [m]
    t_overrun_max: float = 10.0  # trajectory overtime before forced re-plan [s]
    n_fail: int = 3  # consecutive failed re-plans tolerated

    def __post_init__(self):
        if min(self.e_replan, self.d_near, self.r_goal, self.t_overrun_max) <= 0.0:
            raise ValueError("thresholds must be positive")
        if self.r_goal >= self.e_replan:
            raise ValueError("r_goal must be smaller than e_replan")
        if self.hysteresis < 0.0:
            raise ValueError("hysteresis must be >= 0")


@dataclass
class NavConfig:
    gains: ControlGains = field(default_factory=ControlGains)
    thresholds: NavThresholds = field(default_factory=NavThresholds)
    vfh: vfh.VfhParams = field(default_factory=vfh.VfhParams)
    v_max: float = 0.5
    omega_max: float = 1.5
    time_scale: float = trajectory.TIME_SCALE_DEFAULT  # [s/m]
    t_f_min: float = trajectory.T_F_MIN
    robot_radius: float = 0.15
    inflation_radius: float = 0.25
    iir_a1: float = 0.7
    iir_b0: float = 0.3
    # beyond this planar error the tracking law's small-error corrections are
    # too weak; the executor drives straight at the reference point instead
    d_catch: float = 0.3
    eps_vel: float = EPS_VEL
    law_as_printed: bool = False
    single_quintic: bool = False
    reverse: bool = False
    policy: str = "hybrid"  # hybrid | astar-only | vfh-only

    def __post_init__(self):
        if self.policy not in ("hybrid", "astar-only", "vfh-only"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.vfh.d_near != self.thresholds.d_near:
            # keep the single source of truth in thresholds
            self.vfh.d_near = self.thresholds.d_near


@dataclass
class TickResult:
    command: VelocityCommand
    mode: Mode
    events: list[str]
    error: TrackingError
    min_range: float


class Navigator:
    """Per-robot executor. Owns the navigation state; the grid reference is
    the robot's belief map, mutated externally between ticks."""

    def __init__(self, grid: OccupancyGrid, config: NavConfig, goal: Pose):
        self.grid = grid
        self.config = config
        self.goal = goal
        # pure local avoidance has no plan to track; it is always avoiding
        self.mode = Mode.AVOIDING if config.policy == "vfh-only" else Mode.TRACKING
        self.plan: planner.PathPlan | None = None
        self.traj: trajectory.QuinticTrajectory | None = None
        self.t_traj = 0.0
        self.iir = vfh.IirState(a1=config.iir_a1, b0=config.iir_b0)
        self.fail_streak = 0
        self.fail_reason = ""
        self.last_theta_tar = 0.0
        self.avoid_side: float | None = None  # committed passing side
        # set after a no-valley re-plan: the fresh path already routes around
        # everything in the belief, so let the tracker pull the robot out of
        # the near zone instead of re-tripping avoidance on the same spot
        self.vfh_suppressed = False
        self.last_histogram: tuple | None = None
        self.plan_version = 0
        self.replan_count = 0

    # -- planning ----------------------------------------------------------

    def _try_plan(self, pose: Pose) -> None:
        mask = inflate(self.grid, self.config.inflation_radius)
        try:
            start = (pose.x, pose.y)
            self.plan = planner.plan_astar(
                self.grid, mask, start, (self.goal.x, self.goal.y)
            )
        except planner.StartBlocked:
            # a freshly mapped obstacle can inflate over the robot's own
            # cell; plan from the nearest free cell instead of giving up
            start = self._nearest_free(mask, pose)
            self.plan = planner.plan_astar(
                self.grid, mask, start, (self.goal.x, self.goal.y)
            )
        self.traj = trajectory.fit_trajectory(
            self.plan,
            pose,
            time_scale=self.config.time_scale,
            t_f_min=self.config.t_f_min,
            single_quintic=self.config.single_quintic,
            reverse=self.config.reverse,
            eps_vel=self.config.eps_vel,
        )
        self.t_traj = 0.0
        self.plan_version += 1

    def _nearest_free(self, mask, pose: Pose) -> tuple[float, float]:
        """Center of the unblocked cell closest to the robot, searched out to
        twice the inflation radius; re-raises StartBlocked beyond that."""
        grid = self.grid
        col0, row0 = grid.world_to_cell((pose.x, pose.y))
        reach = max(int(math.ceil(2.0 * self.config.inflation_radius
                                  / grid.resolution)), 1)
        best = None
        for row in range(max(row0 - reach, 0), min(row0 + reach + 1, grid.height)):
            for col in range(max(col0 - reach, 0), min(col0 + reach + 1, grid.width)):
                if mask[row, col]:
                    continue
                cx, cy = grid.cell_center((col, row))
                d = math.hypot(cx - pose.x, cy - pose.y)
                if best is None or d < best[0]:
                    best = (d, (cx, cy))
        if best is None:
            raise planner.StartBlocked(
                f"no free cell within {reach} cells of the robot")
        return best[1]

    def plan_and_commit(self, pose: Pose, goal: Pose | None = None) -> None:
        """Plan from scratch against the current belief grid. Planner errors
        become the FAILED state rather than propagating."""
        if goal is not None:
            self.goal = goal
        try:
            self._try_plan(pose)
        except (planner.StartBlocked, planner.GoalBlocked, planner.NoPath) as exc:
            self.mode = Mode.FAILED
            self.fail_reason = type(exc).__name__
            return
        self.mode = Mode.TRACKING
        self.fail_streak = 0

    def _attempt_replan(self, pose: Pose, events: list[str]) -> None:
        """Re-plan during a run; transient failures are retried next tick up
        to n_fail times (a dynamic blocker may move off the start cell)."""
        self.replan_count += 1
        try:
            self._try_plan(pose)
        except (planner.StartBlocked, planner.GoalBlocked, planner.NoPath) as exc:
            self.fail_streak += 1
            events.append(f"PLAN_FAILED({type(exc).__name__})")
            if self.fail_streak > self.config.thresholds.n_fail:
                self.mode = Mode.FAILED
                self.fail_reason = type(exc).__name__
                events.append(f"FAILED({self.fail_reason})")
            else:
                self.mode = Mode.REPLANNING
            return
        self.fail_streak = 0
        self.mode = Mode.TRACKING

    # -- per-tick step ------------------------------------------------------

    def step(self, pose: Pose, scan: RangeScan, dt: float) -> TickResult:
        events: list[str] = []
        th = self.config.thresholds
        min_range = scan.min_range()
        if self.mode in (Mode.ARRIVED, Mode.FAILED):
            return TickResult(VelocityCommand(), self.mode, events,
                              self._log_error(pose), min_range)
        self.t_traj += dt

        if pose.distance_to(self.goal) <= th.r_goal:
            self.mode = Mode.ARRIVED
            events.append("ARRIVED")
            return TickResult(VelocityCommand(), self.mode, events,
                              self._log_error(pose), min_range)

        if self.config.policy == "vfh-only":
            cmd = self._vfh_command(pose, scan, (self.goal.x, self.goal.y), events)
            return TickResult(cmd, self.mode, events, self._log_error(pose), min_range)

        if self.traj is None:
            raise RuntimeError("navigator not initialized; call plan_and_commit first")

        # pending re-plan from a failed attempt: keep retrying, hold still
        if self.mode == Mode.REPLANNING:
            self._attempt_replan(pose, events)
            return TickResult(VelocityCommand(), Mode.REPLANNING if self.mode != Mode.FAILED
                              else Mode.FAILED, events, self._log_error(pose), min_range)

        if self.t_traj > self.traj.t_f + th.t_overrun_max:
            events.append("REPLAN(overrun)")
            self._attempt_replan(pose, events)
            return TickResult(VelocityCommand(), Mode.REPLANNING, events,
                              self._log_error(pose), min_range)

        if self.vfh_suppressed and min_range > th.d_near + th.hysteresis:
            self.vfh_suppressed = False
        if self.mode == Mode.AVOIDING and min_range > th.d_near + th.hysteresis:
            self.mode = Mode.TRACKING
            self.avoid_side = None
            events.append("AVOID_EXIT")
        if (self.mode == Mode.TRACKING and self.config.policy == "hybrid"
                and min_range < th.d_near and not self.vfh_suppressed):
            self.mode = Mode.AVOIDING
            events.append("AVOID_ENTER")

        sample = self.traj.sample(self.t_traj)
        err = tracking_error(pose, sample.ref)

        if self.mode == Mode.AVOIDING:
            try:
                cmd = self._vfh_command(pose, scan, sample.ref.position(), events)
            except vfh.NoValley:
                events.append("REPLAN(no_valley)")
                self.vfh_suppressed = True
                self.avoid_side = None
                self._attempt_replan(pose, events)
                return TickResult(VelocityCommand(), Mode.REPLANNING, events, err, min_range)
            return TickResult(cmd, Mode.AVOIDING, events, err, min_range)

        if err.planar_norm() > th.e_replan:
            events.append("REPLAN(error)")
            self._attempt_replan(pose, events)
            return TickResult(VelocityCommand(), Mode.REPLANNING, events, err, min_range)

        if err.planar_norm() > self.config.d_catch:
            cmd = self._capture_command(pose, sample.ref)
            return TickResult(cmd, Mode.TRACKING, events, err, min_range)

        try:
            v_d, w_d = desired_velocities(*sample.vel, *sample.acc,
                                          eps_vel=self.config.eps_vel)
        except DegenerateVelocity:
            v_d, w_d = self.config.eps_vel, 0.0
        cmd = control_law(
            err, v_d, w_d, self.config.gains,
            v_max=self.config.v_max, omega_max=self.config.omega_max,
            as_printed=self.config.law_as_printed,
        )
        if abs(err.e3) > math.pi / 3.0:
            # far off the path heading (fresh re-plan behind the robot):
            # rotate into alignment before building up speed, otherwise the
            # turn-in swings a wide arc through whatever is alongside
            cmd = VelocityCommand(v=cmd.v * max(math.cos(err.e3), 0.0),
                                  omega=cmd.omega)
        return TickResult(cmd, Mode.TRACKING, events, err, min_range)

    def _capture_command(self, pose: Pose, ref: Pose) -> VelocityCommand:
        """Point-approach used when the robot is far off the reference (a
        fresh re-plan starts at the nearest free cell, not under the robot):
        turn toward the reference point first, then close the gap."""
        gains = self.config.gains
        bearing = math.atan2(ref.y - pose.y, ref.x - pose.x)
        heading_err = wrap_angle(bearing - pose.theta)
        dist = pose.distance_to(ref)
        v = min(gains.k1 * dist, self.config.v_max) * max(math.cos(heading_err), 0.0)
        omega = min(max(gains.k3 * heading_err, -self.config.omega_max),
                    self.config.omega_max)
        return VelocityCommand(v=v, omega=omega)

    def _vfh_command(self, pose: Pose, scan: RangeScan,
                     target: tuple[float, float], events: list[str]) -> VelocityCommand:
        try:
            theta_tar = vfh.local_target(pose, target)
            self.last_theta_tar = theta_tar
        except vfh.RefAtOrigin:
            theta_tar = self.last_theta_tar
        hist = vfh.build_histogram(scan, self.config.vfh)
        try:
            theta = vfh.select_steering(hist, theta_tar, self.config.vfh,
                                        prefer_sign=self.avoid_side)
        except vfh.NoValley:
            self.last_histogram = (hist.densities.copy(), theta_tar, None)
            if self.config.policy == "vfh-only":
                events.append("NO_VALLEY")
                return VelocityCommand()
            raise
        # hold the passing side while diverted so back-to-back ticks cannot
        # dither between equally close valley borders
        if theta == theta_tar:
            self.avoid_side = None
        elif self.avoid_side is None:
            self.avoid_side = 1.0 if theta >= 0.0 else -1.0
        self.last_histogram = (hist.densities.copy(), theta_tar, theta)
        if vfh.sharp_turn(theta):
            events.append("SHARP_TURN")
        cmd = vfh.steer_to_command(theta, self.config.vfh, self.config.omega_max)
        omega = vfh.smooth_command(cmd.omega, self.iir)
        omega = min(max(omega, -self.config.omega_max), self.config.omega_max)
        v = min(max(cmd.v, -self.config.v_max), self.config.v_max)
        return VelocityCommand(v=v, omega=omega)

    def _log_error(self, pose: Pose):
        """Tracking error for telemetry; vfh-only logs error to the goal."""
        if self.traj is not None and self.config.policy != "vfh-only":
            return tracking_error(pose, self.traj.sample(self.t_traj).ref)
        return tracking_error(pose, self.goal)
