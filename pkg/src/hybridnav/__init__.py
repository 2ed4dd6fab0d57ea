"""Hybrid global/local mobile-robot navigation library with a deterministic
2D simulator, headless CLI, and live telemetry server."""

from .kinematics import (
    ControlGains,
    DegenerateVelocity,
    Pose,
    TrackingError,
    VelocityCommand,
    control_law,
    desired_velocities,
    integrate_unicycle,
    tracking_error,
    turning_radius,
    wrap_angle,
)
from .navigator import Mode, NavConfig, Navigator, NavThresholds
from .planner import GoalBlocked, NoPath, PathPlan, StartBlocked, path_length, plan_astar
from .scenario import DynamicObstacle, Scenario, ScenarioInvalid, load_scenario
from .simulator import Metrics, RunReport, Simulation, SimTrace, run_scenario
from .trajectory import (
    IllConditioned,
    QuinticTrajectory,
    TrajectorySample,
    allocate_time,
    build_system,
    fit_quintic,
    fit_trajectory,
)
from .vfh import (
    IirState,
    NoValley,
    PolarHistogram,
    RefAtOrigin,
    VfhParams,
    build_histogram,
    local_target,
    select_steering,
    smooth_command,
    steer_to_command,
)
from .world import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    OccupancyGrid,
    OutOfBounds,
    PoseInObstacle,
    RangeScan,
    ScanSpec,
    inflate,
    raycast_scan,
)

__version__ = "0.1.0"
