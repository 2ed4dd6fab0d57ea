"""Deterministic 2D simulation loop: scripted/interactive dynamic obstacles,
ground-truth sensing, belief-map fusion, the navigator, and the unicycle
plant, with a full per-tick trace.

Per tick, in order: (1) advance dynamic obstacles, (2) rasterize them into a
scratch overlay of the true world, (3) raycast the scan from the true pose,
(4) fuse the scan into the robot's belief grid, (5) navigator step,
(6) integrate the plant (plus optional actuation noise), (7) record.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import Pose, VelocityCommand, integrate_unicycle
from .navigator import Mode, Navigator, TickResult
from .scenario import DynamicObstacle, Scenario
from .world import OCCUPIED, OccupancyGrid, PoseInObstacle, RangeScan, raycast_scan

TRACE_COLUMNS = [
    "tick", "mode", "min_range", "e1", "e2", "e3", "v", "omega", "events",
    "x", "y", "theta", "clearance", "collision",
]


@dataclass
class TickRecord:
    tick: int
    mode: str
    min_range: float
    e1: float
    e2: float
    e3: float
    v: float
    omega: float
    events: list[str]
    x: float
    y: float
    theta: float
    clearance: float
    collision: bool

    def row(self) -> list[str]:
        return [
            str(self.tick), self.mode, repr(self.min_range),
            repr(self.e1), repr(self.e2), repr(self.e3),
            repr(self.v), repr(self.omega), ";".join(self.events),
            repr(self.x), repr(self.y), repr(self.theta),
            repr(self.clearance), "1" if self.collision else "0",
        ]


@dataclass
class Metrics:
    outcome: str = "TIMEOUT"
    reason: str = ""
    run_time: float = 0.0
    path_length: float = 0.0
    min_clearance: float = math.inf
    replan_count: int = 0
    avoid_tick_fraction: float = 0.0
    max_error: float = 0.0
    collision_count: int = 0
    ticks: int = 0
    final_goal_distance: float = math.inf

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        for key, value in d.items():
            if isinstance(value, float) and math.isinf(value):
                d[key] = None
        return d


@dataclass
class SimTrace:
    records: list[TickRecord] = field(default_factory=list)
    plans: list[dict] = field(default_factory=list)
    trajectories: list[dict] = field(default_factory=list)
    metrics: Metrics = field(default_factory=Metrics)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in self.records:
            out.write(",".join(rec.row()) + "\n")
        return out.getvalue()


@dataclass
class RunReport:
    scenario: str
    policy: str
    seed: int
    fingerprint: str
    metrics: Metrics

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "policy": self.policy,
            "seed": self.seed,
            "config_fingerprint": self.fingerprint,
            "outcome": self.metrics.outcome,
            "metrics": self.metrics.to_dict(),
        }


class Simulation:
    """Owns the authoritative tick loop. External inputs (operator commands)
    are applied only at tick boundaries via apply_command()."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.static_grid = scenario.grid
        self.belief = scenario.grid.copy()
        self.pose = Pose(scenario.robot_start.x, scenario.robot_start.y,
                         scenario.robot_start.theta)
        self.obstacles: list[DynamicObstacle] = list(scenario.obstacles)
        self.rng = np.random.default_rng(scenario.seed)
        self.trace = SimTrace()
        self.tick_index = 0
        self.navigator = Navigator(self.belief, scenario.nav, scenario.goal)
        self._static_occupied = scenario.grid.occupied_cells()
        self._plan_version_seen = 0
        self._scheduled = {}
        for cmd in scenario.commands:
            self._scheduled.setdefault(int(cmd.get("tick", 0)), []).append(cmd)
        if scenario.nav.policy != "vfh-only":
            self.navigator.plan_and_commit(self.pose)
            self._record_plan()

    # -- operator/scripted commands -----------------------------------------

    def apply_command(self, cmd: dict) -> None:
        """ADD/MOVE/REMOVE_OBSTACLE and SET_GOAL, applied between ticks."""
        kind = cmd.get("kind")
        if kind == "ADD_OBSTACLE":
            obstacle = DynamicObstacle(
                obstacle_id=str(cmd["id"]), radius=float(cmd["radius"]), external=True)
            obstacle.set_position(tuple(cmd["position"]))
            self.obstacles.append(obstacle)
        elif kind == "MOVE_OBSTACLE":
            for obstacle in self.obstacles:
                if obstacle.obstacle_id == cmd["id"]:
                    obstacle.external = True
                    obstacle.set_position(tuple(cmd["position"]))
                    break
            else:
                raise KeyError(f"unknown obstacle id {cmd['id']!r}")
        elif kind == "REMOVE_OBSTACLE":
            self.obstacles = [o for o in self.obstacles
                              if o.obstacle_id != cmd["id"]]
        elif kind == "SET_GOAL":
            x, y = cmd["position"]
            self.navigator.plan_and_commit(self.pose, goal=Pose(float(x), float(y)))
            self._record_plan()
        else:
            raise ValueError(f"unknown command kind {kind!r}")

    # -- core loop -----------------------------------------------------------

    def overlay_grid(self, t: float) -> OccupancyGrid:
        """True world at time t: static map plus dynamic discs rasterized in.
        The overlay is scratch; dynamic obstacles enter the belief only
        through scans."""
        overlay = OccupancyGrid(
            self.static_grid.width, self.static_grid.height,
            self.static_grid.resolution, self.static_grid.origin,
            self.static_grid.states.copy(), self.static_grid.log_odds,
            self.static_grid.touched,
        )
        for obstacle in self.obstacles:
            xy = obstacle.position(t)
            if xy is not None:
                _rasterize_disc(overlay.states, self.static_grid, xy, obstacle.radius)
        return overlay

    def _clearance(self, t: float) -> float:
        """Distance from the robot center to the nearest true obstacle:
        occupied static cell centers, exact disc surfaces for dynamics."""
        best = math.inf
        if self._static_occupied.size:
            d = np.hypot(self._static_occupied[:, 0] - self.pose.x,
                         self._static_occupied[:, 1] - self.pose.y)
            best = float(d.min())
        for obstacle in self.obstacles:
            xy = obstacle.position(t)
            if xy is not None:
                d = math.hypot(xy[0] - self.pose.x, xy[1] - self.pose.y) - obstacle.radius
                best = min(best, d)
        return best

    def _record_plan(self) -> None:
        if self.navigator.plan_version == self._plan_version_seen:
            return
        self._plan_version_seen = self.navigator.plan_version
        plan = self.navigator.plan
        traj = self.navigator.traj
        if plan is not None:
            self.trace.plans.append({
                "tick": self.tick_index,
                "xs": [float(v) for v in plan.xs],
                "ys": [float(v) for v in plan.ys],
            })
        if traj is not None:
            entry = traj.to_dict()
            entry["tick"] = self.tick_index
            self.trace.trajectories.append(entry)

    def tick(self) -> TickRecord:
        t = self.tick_index * self.scenario.tick_dt
        for cmd in self._scheduled.get(self.tick_index, []):
            self.apply_command(cmd)
        overlay = self.overlay_grid(t)
        try:
            scan = raycast_scan(self.pose, overlay, self.scenario.scan)
        except PoseInObstacle:
            # robot body overlapped by an obstacle: report point-blank returns
            ranges = np.full(self.scenario.scan.beam_count,
                             self.static_grid.resolution / 2.0)
            scan = RangeScan(ranges=ranges, spec=self.scenario.scan)
        self.belief.update_from_scan(self.pose, scan)
        result = self.navigator.step(self.pose, scan, self.scenario.tick_dt)
        self._record_plan()
        clearance = self._clearance(t)
        record = TickRecord(
            tick=self.tick_index,
            mode=result.mode.value,
            min_range=result.min_range,
            e1=result.error.e1, e2=result.error.e2, e3=result.error.e3,
            v=result.command.v, omega=result.command.omega,
            events=result.events,
            x=self.pose.x, y=self.pose.y, theta=self.pose.theta,
            clearance=clearance,
            collision=clearance < self.scenario.nav.robot_radius,
        )
        self.trace.records.append(record)
        cmd = result.command
        if self.scenario.sigma_v > 0.0 or self.scenario.sigma_omega > 0.0:
            cmd = VelocityCommand(
                v=cmd.v + self.rng.normal(0.0, self.scenario.sigma_v),
                omega=cmd.omega + self.rng.normal(0.0, self.scenario.sigma_omega),
            )
        self.pose = integrate_unicycle(self.pose, cmd, self.scenario.tick_dt)
        self.tick_index += 1
        return record

    def finished(self) -> bool:
        return self.navigator.mode in (Mode.ARRIVED, Mode.FAILED)

    def run(self) -> tuple[SimTrace, RunReport]:
        while self.tick_index < self.scenario.max_ticks:
            self.tick()
            if self.finished():
                break
        self.finalize_metrics()
        report = RunReport(
            scenario=self.scenario.name,
            policy=self.scenario.nav.policy,
            seed=self.scenario.seed,
            fingerprint=self.scenario.fingerprint(),
            metrics=self.trace.metrics,
        )
        return self.trace, report

    def finalize_metrics(self) -> None:
        records = self.trace.records
        m = Metrics()
        m.ticks = len(records)
        if not records:
            self.trace.metrics = m
            return
        if self.navigator.mode == Mode.ARRIVED:
            m.outcome = "ARRIVED"
            m.run_time = records[-1].tick * self.scenario.tick_dt
        elif self.navigator.mode == Mode.FAILED:
            m.outcome = "FAILED"
            m.reason = self.navigator.fail_reason
            m.run_time = records[-1].tick * self.scenario.tick_dt
        else:
            m.outcome = "TIMEOUT"
            m.run_time = len(records) * self.scenario.tick_dt
        xs = np.array([r.x for r in records])
        ys = np.array([r.y for r in records])
        m.path_length = float(np.hypot(np.diff(xs), np.diff(ys)).sum())
        m.min_clearance = min(r.clearance for r in records)
        m.collision_count = sum(r.collision for r in records)
        m.replan_count = self.navigator.replan_count
        avoiding = sum(r.mode == Mode.AVOIDING.value for r in records)
        m.avoid_tick_fraction = avoiding / len(records)
        m.max_error = max(math.hypot(r.e1, r.e2) for r in records)
        m.final_goal_distance = self.pose.distance_to(self.navigator.goal)
        self.trace.metrics = m


def _rasterize_disc(states: np.ndarray, grid: OccupancyGrid,
                    center: tuple[float, float], radius: float) -> None:
    res = grid.resolution
    cx = (center[0] - grid.origin[0]) / res
    cy = (center[1] - grid.origin[1]) / res
    r_cells = radius / res
    col_lo = max(int(math.floor(cx - r_cells - 1)), 0)
    col_hi = min(int(math.ceil(cx + r_cells + 1)), grid.width - 1)
    row_lo = max(int(math.floor(cy - r_cells - 1)), 0)
    row_hi = min(int(math.ceil(cy + r_cells + 1)), grid.height - 1)
    if col_lo > col_hi or row_lo > row_hi:
        return
    cols = np.arange(col_lo, col_hi + 1)
    rows = np.arange(row_lo, row_hi + 1)
    dx = cols + 0.5 - cx
    dy = rows + 0.5 - cy
    inside = dx[None, :] ** 2 + dy[:, None] ** 2 <= r_cells * r_cells
    block = states[row_lo:row_hi + 1, col_lo:col_hi + 1]
    block[inside] = OCCUPIED


def run_scenario(scenario: Scenario) -> tuple[SimTrace, RunReport]:
    return Simulation(scenario).run()


def write_artifacts(trace: SimTrace, report: RunReport, out_dir) -> dict:
    """Write trace.csv and metrics.json; returns the artifact paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    trace_path.write_text(trace.to_csv())
    metrics_path = out / "metrics.json"
    payload = report.to_dict()
    payload["plans"] = trace.plans
    payload["trajectories"] = trace.trajectories
    metrics_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return {"trace": trace_path, "metrics": metrics_path}
