"""Unicycle kinematics: pose/error types, the nonlinear tracking control law,
differential-drive turning radius, and exact-arc plant integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

V_MAX_DEFAULT = 0.5
OMEGA_MAX_DEFAULT = 1.5
EPS_VEL = 1e-3
_EPS_OMEGA = 1e-9


class DegenerateVelocity(ValueError):
    """Reference speed too small to define a desired angular velocity."""


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def sinc(x: float) -> float:
    """sin(x)/x with the removable singularity filled in (sinc(0) = 1)."""
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return math.sin(x) / x


@dataclass
class Pose:
    """Planar pose in the global frame; theta normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        self.theta = wrap_angle(self.theta)

    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass
class TrackingError:
    """Trajectory tracking error expressed in the robot frame."""

    e1: float  # longitudinal [m]
    e2: float  # lateral [m]
    e3: float  # heading [rad], in (-pi, pi]

    def planar_norm(self) -> float:
        return math.hypot(self.e1, self.e2)


@dataclass
class VelocityCommand:
    v: float = 0.0  # [m/s]
    omega: float = 0.0  # [rad/s]


@dataclass
class ControlGains:
    k1: float = 1.0
    k2: float = 4.0
    k3: float = 2.0

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3) <= 0.0:
            raise ValueError("control gains must be strictly positive")


def tracking_error(pose: Pose, ref: Pose) -> TrackingError:
    """Rotate the global position error into the robot frame.

    e1 is the along-heading component, e2 the lateral component, e3 the
    normalized heading error.
    """
    dx = ref.x - pose.x
    dy = ref.y - pose.y
    c = math.cos(pose.theta)
    s = math.sin(pose.theta)
    return TrackingError(
        e1=c * dx + s * dy,
        e2=-s * dx + c * dy,
        e3=wrap_angle(ref.theta - pose.theta),
    )


def desired_velocities(
    vx_ref: float, vy_ref: float, ax_ref: float, ay_ref: float, eps_vel: float = EPS_VEL
) -> tuple[float, float]:
    """Feedforward (v_d, w_d) from reference velocity and acceleration.

    Raises DegenerateVelocity when the reference speed is below eps_vel;
    callers substitute (eps_vel, 0) at trajectory endpoints.
    """
    speed_sq = vx_ref * vx_ref + vy_ref * vy_ref
    if speed_sq <= eps_vel * eps_vel:
        raise DegenerateVelocity(f"reference speed {math.sqrt(speed_sq):.2e} below {eps_vel:.0e}")
    v_d = math.sqrt(speed_sq)
    w_d = (ay_ref * vx_ref - ax_ref * vy_ref) / speed_sq
    return v_d, w_d


def control_law(
    err: TrackingError,
    v_d: float,
    w_d: float,
    gains: ControlGains,
    v_max: float = V_MAX_DEFAULT,
    omega_max: float = OMEGA_MAX_DEFAULT,
    as_printed: bool = False,
) -> VelocityCommand:
    """Nonlinear tracking law: v = v_d cos(e3) - u1, omega = w_d - u2.

    The default steering correction is u2 = -k2 v_d sinc(e3) e2 - k3 e3,
    which is a fixed point at zero error. as_printed=True drops the lateral
    e2 factor (u2 = -k2 v_d sinc(e3) - k3 e3), which leaves a residual turn
    command even at zero error; kept for comparison runs only.
    """
    u1 = -gains.k1 * err.e1
    if as_printed:
        u2 = -gains.k2 * v_d * sinc(err.e3) - gains.k3 * err.e3
    else:
        u2 = -gains.k2 * v_d * sinc(err.e3) * err.e2 - gains.k3 * err.e3
    v = v_d * math.cos(err.e3) - u1
    omega = w_d - u2
    return VelocityCommand(
        v=min(max(v, -v_max), v_max),
        omega=min(max(omega, -omega_max), omega_max),
    )


def turning_radius(cmd: VelocityCommand) -> float:
    """Instantaneous turning radius v/omega; straight motion reports inf."""
    if cmd.omega == 0.0:
        return math.inf
    return cmd.v / cmd.omega


def integrate_unicycle(pose: Pose, cmd: VelocityCommand, dt: float) -> Pose:
    """Advance the unicycle plant by dt using exact-arc integration.

    For |omega| below 1e-9 the step degenerates to a straight segment; the
    traveled arc length is |v| * dt in both branches.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if abs(cmd.omega) < _EPS_OMEGA:
        return Pose(
            x=pose.x + cmd.v * dt * math.cos(pose.theta),
            y=pose.y + cmd.v * dt * math.sin(pose.theta),
            theta=pose.theta,
        )
    radius = cmd.v / cmd.omega
    theta_new = pose.theta + cmd.omega * dt
    return Pose(
        x=pose.x + radius * (math.sin(theta_new) - math.sin(pose.theta)),
        y=pose.y - radius * (math.cos(theta_new) - math.cos(pose.theta)),
        theta=theta_new,
    )
