"""Scenario files: declarative world + robot + obstacle scripts as JSON.

Top-level keys: ``map``, ``robot_start``, ``goal``, ``scan``, ``nav``,
``obstacles``, ``sim`` (plus optional ``name`` and ``commands`` for replaying
interactive sessions). Every key not present falls back to the defaults
documented in the README.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .kinematics import ControlGains, Pose
from .navigator import NavConfig, NavThresholds
from .vfh import VfhParams
from .world import OCCUPIED, OccupancyGrid, ScanSpec


class ScenarioInvalid(ValueError):
    """Scenario failed validation; ``problems`` lists field-level messages."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class DynamicObstacle:
    """Disc obstacle, either scripted (piecewise-linear waypoints) or driven
    externally by operator commands. A scripted obstacle pops into existence
    at its first waypoint time."""

    obstacle_id: str
    radius: float
    script: list[tuple[float, float, float]] = field(default_factory=list)
    external: bool = False
    _position: tuple[float, float] | None = None

    def position(self, t: float) -> tuple[float, float] | None:
        if self.external:
            return self._position
        if not self.script or t < self.script[0][0]:
            return None
        for (t0, x0, y0), (t1, x1, y1) in zip(self.script, self.script[1:]):
            if t <= t1:
                if t1 == t0:
                    return (x1, y1)
                u = (t - t0) / (t1 - t0)
                return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))
        return (self.script[-1][1], self.script[-1][2])

    def set_position(self, xy: tuple[float, float]) -> None:
        self._position = xy


@dataclass
class Scenario:
    name: str
    grid: OccupancyGrid
    robot_start: Pose
    goal: Pose
    scan: ScanSpec
    nav: NavConfig
    obstacles: list[DynamicObstacle]
    tick_dt: float = 0.05
    max_ticks: int = 2000
    seed: int = 0
    sigma_v: float = 0.0
    sigma_omega: float = 0.0
    commands: list[dict] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def fingerprint(self) -> str:
        """Stable hash of the fully-resolved configuration."""
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()[:16]


def _pose_from(value, problems, key) -> Pose:
    try:
        if isinstance(value, dict):
            return Pose(float(value["x"]), float(value["y"]),
                        float(value.get("theta", 0.0)))
        x, y, *rest = value
        return Pose(float(x), float(y), float(rest[0]) if rest else 0.0)
    except (KeyError, TypeError, ValueError):
        problems.append(f"{key}: expected {{x, y, theta}} or [x, y, theta]")
        return Pose(0.0, 0.0)


def load_scenario(source, base_dir: Path | None = None,
                  overrides: dict | None = None) -> Scenario:
    """Build a validated Scenario from a JSON file path or a plain dict.

    ``overrides`` merges CLI settings (seed, policy, law flags) into the
    resolved configuration before validation so they are part of the
    fingerprint.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if base_dir is None:
            base_dir = path.parent
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ScenarioInvalid([f"scenario file not found: {path}"])
        except json.JSONDecodeError as exc:
            raise ScenarioInvalid([f"scenario file is not valid JSON: {exc}"])
    else:
        data = copy.deepcopy(source)
        if base_dir is None:
            base_dir = Path.cwd()

    problems: list[str] = []
    if not isinstance(data, dict):
        raise ScenarioInvalid(["scenario root must be a JSON object"])
    for key in ("map", "robot_start", "goal"):
        if key not in data:
            problems.append(f"{key}: required key missing")
    if problems:
        raise ScenarioInvalid(problems)

    if overrides:
        for dotted, value in overrides.items():
            node = data
            *parents, leaf = dotted.split(".")
            for part in parents:
                node = node.setdefault(part, {})
            node[leaf] = value

    map_spec = data["map"]
    grid = None
    if isinstance(map_spec, dict) and "file" in map_spec:
        map_path = Path(map_spec["file"])
        if not map_path.is_absolute():
            map_path = base_dir / map_path
        try:
            grid = OccupancyGrid.load(map_path)
        except (OSError, ValueError) as exc:
            problems.append(f"map.file: {exc}")
    elif isinstance(map_spec, dict) and "ascii" in map_spec:
        try:
            grid = OccupancyGrid.from_ascii(
                map_spec["ascii"],
                float(map_spec.get("resolution", 0.05)),
                tuple(map_spec.get("origin", (0.0, 0.0))),
            )
        except ValueError as exc:
            problems.append(f"map.ascii: {exc}")
    else:
        problems.append("map: needs either 'file' or 'ascii'")
    if grid is None:
        raise ScenarioInvalid(problems)

    start = _pose_from(data["robot_start"], problems, "robot_start")
    goal = _pose_from(data["goal"], problems, "goal")

    scan_cfg = data.get("scan", {})
    try:
        scan = ScanSpec(
            fov=math.radians(float(scan_cfg.get("fov_deg", 270.0))),
            beam_count=int(scan_cfg.get("beam_count", 1080)),
            max_range=float(scan_cfg.get("max_range", 4.0)),
        )
    except ValueError as exc:
        problems.append(f"scan: {exc}")
        scan = ScanSpec()

    nav_cfg = data.get("nav", {})
    try:
        nav = _nav_config(nav_cfg)
    except (ValueError, TypeError) as exc:
        problems.append(f"nav: {exc}")
        nav = NavConfig()

    obstacles: list[DynamicObstacle] = []
    for i, obs in enumerate(data.get("obstacles", [])):
        key = f"obstacles[{i}]"
        try:
            radius = float(obs["radius"])
            if radius <= 0.0:
                problems.append(f"{key}.radius: must be positive")
            external = obs.get("mode") == "external"
            script = []
            if not external:
                script = [(float(t), float(x), float(y))
                          for t, (x, y) in obs.get("script", [])]
                times = [s[0] for s in script]
                if times != sorted(times) or len(set(times)) != len(times):
                    problems.append(f"{key}.script: times must be strictly increasing")
            obstacles.append(DynamicObstacle(
                obstacle_id=str(obs.get("id", f"obs{i}")),
                radius=radius, script=script, external=external,
            ))
        except (KeyError, TypeError, ValueError):
            problems.append(f"{key}: expected {{id, radius, script|mode}}")

    sim_cfg = data.get("sim", {})
    tick_dt = float(sim_cfg.get("tick_dt", 0.05))
    max_ticks = int(sim_cfg.get("max_ticks", 2000))
    if tick_dt <= 0.0:
        problems.append("sim.tick_dt: must be positive")
    if max_ticks < 1:
        problems.append("sim.max_ticks: must be >= 1")

    # start/goal must land on unoccupied cells of the raw static map
    for key, pose in (("robot_start", start), ("goal", goal)):
        try:
            if grid.state_at((pose.x, pose.y)) == OCCUPIED:
                problems.append(f"{key}: inside an occupied cell")
        except ValueError:
            problems.append(f"{key}: outside the map")

    if problems:
        raise ScenarioInvalid(problems)

    return Scenario(
        name=str(data.get("name", "scenario")),
        grid=grid,
        robot_start=start,
        goal=goal,
        scan=scan,
        nav=nav,
        obstacles=obstacles,
        tick_dt=tick_dt,
        max_ticks=max_ticks,
        seed=int(sim_cfg.get("seed", 0)),
        sigma_v=float(sim_cfg.get("sigma_v", 0.0)),
        sigma_omega=float(sim_cfg.get("sigma_omega", 0.0)),
        commands=list(data.get("commands", [])),
        raw=data,
    )


def _nav_config(cfg: dict) -> NavConfig:
    gains_cfg = cfg.get("gains", {})
    if isinstance(gains_cfg, (list, tuple)):
        gains = ControlGains(*[float(g) for g in gains_cfg])
    else:
        gains = ControlGains(
            k1=float(gains_cfg.get("k1", 1.0)),
            k2=float(gains_cfg.get("k2", 4.0)),
            k3=float(gains_cfg.get("k3", 2.0)),
        )
    th_cfg = cfg.get("thresholds", {})
    thresholds = NavThresholds(
        e_replan=float(th_cfg.get("e_replan", 0.5)),
        d_near=float(th_cfg.get("d_near", 0.6)),
        hysteresis=float(th_cfg.get("hysteresis", 0.2)),
        r_goal=float(th_cfg.get("r_goal", 0.15)),
        t_overrun_max=float(th_cfg.get("t_overrun_max", 10.0)),
        n_fail=int(th_cfg.get("n_fail", 3)),
    )
    vfh_cfg = cfg.get("vfh", {})
    params = VfhParams(
        sectors=int(vfh_cfg.get("sectors", 72)),
        threshold=float(vfh_cfg.get("threshold", 1.0)),
        s_max=int(vfh_cfg.get("s_max", 4)),
        d_near=thresholds.d_near,
        v_const=float(vfh_cfg.get("v_const", 0.2)),
        active_window=float(vfh_cfg.get("active_window", 1.5)),
        enlargement_radius=float(vfh_cfg.get("enlargement_radius", 0.0)),
    )
    robot_radius = float(cfg.get("robot_radius", 0.15))
    return NavConfig(
        gains=gains,
        thresholds=thresholds,
        vfh=params,
        v_max=float(cfg.get("v_max", 0.5)),
        omega_max=float(cfg.get("omega_max", 1.5)),
        time_scale=float(cfg.get("time_scale", 2.0)),
        t_f_min=float(cfg.get("t_f_min", 1.0)),
        robot_radius=robot_radius,
        inflation_radius=float(cfg.get("inflation_radius", robot_radius + 0.1)),
        iir_a1=float(vfh_cfg.get("iir_a1", 0.7)),
        iir_b0=float(vfh_cfg.get("iir_b0", 0.3)),
        law_as_printed=bool(cfg.get("law_as_printed", False)),
        single_quintic=bool(cfg.get("single_quintic", False)),
        policy=str(cfg.get("policy", "hybrid")),
    )
