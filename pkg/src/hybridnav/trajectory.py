"""Quintic time-polynomial trajectories fitted through planner via-points.

Each axis is a degree-5 polynomial of time fitted by minimum-norm least
squares over interleaved position/velocity constraints. Long paths are split
into overlapping 12-point windows fitted independently (a single quintic has
6 DOF per axis and cannot follow a winding path); windows share position and
velocity constraints at their junction via-point.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kinematics import EPS_VEL, Pose, wrap_angle
from .planner import PathPlan

T_F_MIN = 1.0
TIME_SCALE_DEFAULT = 2.0
WINDOW_SIZE = 12
COND_LIMIT = 1e12


class DimensionMismatch(ValueError):
    pass


class IllConditioned(RuntimeError):
    """Constraint system condition estimate exceeds the safe limit; the time
    samples are pathological (e.g. duplicates)."""


@dataclass
class TrajectorySample:
    ref: Pose
    vel: tuple[float, float]
    acc: tuple[float, float]


@dataclass
class QuinticSegment:
    """One fitted window, valid on [t0, t1]; coefficients are in local time
    tau = t - t0 to keep high powers small."""

    t0: float
    t1: float
    ax: np.ndarray  # 6 coefficients, constant term first
    ay: np.ndarray

    def eval(self, t: float) -> tuple[float, float, float, float, float, float]:
        tau = t - self.t0
        x = _horner(self.ax, tau)
        y = _horner(self.ay, tau)
        vx = _horner(_derive(self.ax), tau)
        vy = _horner(_derive(self.ay), tau)
        accx = _horner(_derive(_derive(self.ax)), tau)
        accy = _horner(_derive(_derive(self.ay)), tau)
        return x, y, vx, vy, accx, accy


@dataclass
class QuinticTrajectory:
    """Piecewise-quintic reference trajectory on [0, t_f].

    Sampling outside [0, t_f] clamps to the boundary. Where the reference
    speed is below eps_vel the heading falls back to the path tangent of the
    nearest plan end (atan2 of a near-zero velocity is meaningless).
    """

    segments: list[QuinticSegment]
    t_f: float
    n: int
    time_scale: float
    heading_start: float = 0.0
    heading_end: float = 0.0
    reverse: bool = False
    eps_vel: float = EPS_VEL
    # below this speed the fitted velocity direction is residual noise, not
    # signal; the heading falls back to the nearest path-end tangent
    theta_speed_floor: float = EPS_VEL
    _starts: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        self._starts = [seg.t0 for seg in self.segments]

    def segment_at(self, t: float) -> QuinticSegment:
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[max(i, 0)]

    def sample(self, t: float) -> TrajectorySample:
        t = min(max(t, 0.0), self.t_f)
        x, y, vx, vy, accx, accy = self.segment_at(t).eval(t)
        speed = math.hypot(vx, vy)
        if speed < self.theta_speed_floor:
            theta = self.heading_start if t < 0.5 * self.t_f else self.heading_end
        else:
            theta = math.atan2(vy, vx)
        if self.reverse:
            theta += math.pi
        return TrajectorySample(
            ref=Pose(x, y, wrap_angle(theta)),
            vel=(vx, vy),
            acc=(accx, accy),
        )

    def to_dict(self) -> dict:
        return {
            "t_f": self.t_f,
            "n": self.n,
            "time_scale": self.time_scale,
            "segments": [
                {"t0": s.t0, "t1": s.t1, "ax": s.ax.tolist(), "ay": s.ay.tolist()}
                for s in self.segments
            ],
        }


def _horner(coeffs: np.ndarray, t: float) -> float:
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * t + c
    return float(acc)


def _derive(coeffs: np.ndarray) -> np.ndarray:
    return coeffs[1:] * np.arange(1, len(coeffs))


def allocate_time(
    plan: PathPlan,
    robot: Pose,
    time_scale: float = TIME_SCALE_DEFAULT,
    t_f_min: float = T_F_MIN,
) -> tuple[float, np.ndarray]:
    """End time and per-via-point sample instants.

    t_f = max(time_scale * Range, t_f_min) with Range the straight-line
    robot-to-goal distance; instants step by dt = t_f / n from zero, with the
    final via-point pinned to t_f so the fitted trajectory ends at the goal.
    """
    if time_scale <= 0.0:
        raise ValueError("time_scale must be positive")
    if plan.n < 1:
        raise ValueError("plan must contain at least one via-point")
    gx, gy = plan.goal_xy()
    rng = math.hypot(gx - robot.x, gy - robot.y)
    t_f = max(time_scale * rng, t_f_min)
    if plan.n == 1:
        return t_f, np.array([0.0])
    dt = t_f / plan.n
    times = np.empty(plan.n)
    times[: plan.n - 1] = dt * np.arange(plan.n - 1)
    times[-1] = t_f
    return t_f, times


def via_velocities(plan: PathPlan, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Velocity constraints at via-points: central differences of neighbor
    via-points over their time gap; both path endpoints are at rest."""
    n = plan.n
    vx = np.zeros(n)
    vy = np.zeros(n)
    if n > 2:
        gap = times[2:] - times[:-2]
        vx[1:-1] = (plan.xs[2:] - plan.xs[:-2]) / gap
        vy[1:-1] = (plan.ys[2:] - plan.ys[:-2]) / gap
    return vx, vy


def build_system(
    times: np.ndarray,
    plan: PathPlan,
    velocities: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interleaved constraint system: rows alternate the monomial basis
    [1, t, ..., t^5] (position) and its derivative [0, 1, 2t, ..., 5t^4]
    (velocity); b vectors interleave coordinates and velocities."""
    times = np.asarray(times, dtype=float)
    vxs, vys = velocities
    n = len(times)
    if not (plan.n == n == len(vxs) == len(vys)):
        raise DimensionMismatch(
            f"got {n} times, {plan.n} via-points, {len(vxs)}/{len(vys)} velocities"
        )
    if n > 1 and not np.all(np.diff(times) > 0.0):
        raise DimensionMismatch("time samples must be strictly increasing")
    powers = np.arange(6)
    a_mat = np.zeros((2 * n, 6))
    a_mat[0::2] = times[:, None] ** powers[None, :]
    a_mat[1::2, 1:] = powers[1:][None, :] * times[:, None] ** (powers[:-1][None, :])
    b_x = np.empty(2 * n)
    b_y = np.empty(2 * n)
    b_x[0::2] = plan.xs
    b_x[1::2] = vxs
    b_y[0::2] = plan.ys
    b_y[1::2] = vys
    return a_mat, b_x, b_y


def fit_quintic(
    a_mat: np.ndarray, b_x: np.ndarray, b_y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm least-squares coefficients via a column-pivoted
    orthogonal factorization.

    Columns are equilibrated first so t^5 growth does not swamp the
    conditioning; all-zero columns (t = 0 only systems) get zero
    coefficients. Raises IllConditioned when the equilibrated system's
    condition estimate exceeds 1e12.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    if a_mat.ndim != 2 or a_mat.shape[1] != 6:
        raise DimensionMismatch("constraint matrix must have 6 columns")
    if a_mat.shape[0] != len(b_x) or a_mat.shape[0] != len(b_y):
        raise DimensionMismatch("constraint matrix and b vectors disagree")
    col_norm = np.linalg.norm(a_mat, axis=0)
    active = col_norm > 0.0
    scaled = a_mat[:, active] / col_norm[active]
    if a_mat.shape[0] >= int(active.sum()):
        sv = np.linalg.svd(scaled, compute_uv=False)
        if sv[-1] <= 0.0 or sv[0] / sv[-1] > COND_LIMIT:
            raise IllConditioned("degenerate time samples (condition > 1e12)")
    b = np.column_stack([b_x, b_y])
    sol, _, _, _ = linalg.lstsq(scaled, b, lapack_driver="gelsy")
    coeffs = np.zeros((6, 2))
    coeffs[active] = sol / col_norm[active, None]
    return coeffs[:, 0], coeffs[:, 1]


def fit_trajectory(
    plan: PathPlan,
    robot: Pose,
    time_scale: float = TIME_SCALE_DEFAULT,
    t_f_min: float = T_F_MIN,
    single_quintic: bool = False,
    reverse: bool = False,
    eps_vel: float = EPS_VEL,
) -> QuinticTrajectory:
    """Fit the full reference trajectory for a plan from the robot's pose."""
    t_f, times = allocate_time(plan, robot, time_scale, t_f_min)
    vxs, vys = via_velocities(plan, times)
    if plan.n >= 2:
        heading_start = math.atan2(plan.ys[1] - plan.ys[0], plan.xs[1] - plan.xs[0])
        heading_end = math.atan2(plan.ys[-1] - plan.ys[-2], plan.xs[-1] - plan.xs[-2])
    else:
        heading_start = heading_end = robot.theta
    if single_quintic or plan.n <= WINDOW_SIZE:
        windows = [(0, plan.n)]
    else:
        windows = []
        start = 0
        while start < plan.n - 1:
            stop = min(start + WINDOW_SIZE, plan.n)
            windows.append((start, stop))
            start = stop - 1  # next window shares the junction via-point
    segments = []
    for lo, hi in windows:
        sub = PathPlan(xs=plan.xs[lo:hi], ys=plan.ys[lo:hi], cells=plan.cells[lo:hi])
        sub_times = times[lo:hi] - times[lo]
        a_mat, b_x, b_y = build_system(sub_times, sub, (vxs[lo:hi], vys[lo:hi]))
        ax, ay = fit_quintic(a_mat, b_x, b_y)
        t1 = times[hi - 1] if hi - 1 > lo else t_f
        segments.append(QuinticSegment(t0=float(times[lo]), t1=float(t1), ax=ax, ay=ay))
    gx, gy = plan.goal_xy()
    v_nominal = math.hypot(gx - robot.x, gy - robot.y) / t_f
    return QuinticTrajectory(
        segments=segments,
        t_f=t_f,
        n=plan.n,
        time_scale=time_scale,
        heading_start=heading_start,
        heading_end=heading_end,
        reverse=reverse,
        eps_vel=eps_vel,
        theta_speed_floor=max(eps_vel, 0.1 * v_nominal),
    )
