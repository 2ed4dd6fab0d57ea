"""Vector-field-histogram local avoidance: polar obstacle histogram, valley
selection toward a target direction, pure-pursuit steering at constant linear
velocity, and first-order IIR smoothing of the angular command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import Pose, VelocityCommand, wrap_angle
from .world import RangeScan

_TWO_PI = 2.0 * math.pi


class RefAtOrigin(ValueError):
    """Target point coincides with the robot position; no direction exists."""


class NoValley(RuntimeError):
    """No admissible histogram valley; the caller must stop and re-plan."""


@dataclass
class VfhParams:
    sectors: int = 72
    threshold: float = 1.0
    s_max: int = 4  # minimum valley width [sectors]
    d_near: float = 0.6  # avoidance trigger distance [m]
    v_const: float = 0.2  # linear speed while avoiding [m/s]
    active_window: float = 1.5  # ranges beyond this are ignored [m]
    # half-width the robot body subtends is added to every return, widening
    # blocked fans as obstacles get close; 0 = point-robot histogram
    enlargement_radius: float = 0.0

    def __post_init__(self):
        if self.sectors < 1:
            raise ValueError("sectors must be >= 1")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")
        if self.s_max < 1:
            raise ValueError("s_max must be >= 1")
        if self.v_const <= 0.0:
            raise ValueError("v_const must be positive")
        if self.active_window <= 0.0:
            raise ValueError("active_window must be positive")
        if self.enlargement_radius < 0.0:
            raise ValueError("enlargement_radius must be >= 0")

    @property
    def sector_width(self) -> float:
        return _TWO_PI / self.sectors


@dataclass
class PolarHistogram:
    """Sector obstacle densities in the robot frame; sector 0 is centered on
    the robot heading, indices increase counterclockwise."""

    densities: np.ndarray
    sector_width: float

    @property
    def sectors(self) -> int:
        return len(self.densities)

    def sector_of(self, angle: float) -> int:
        return int(math.floor((angle % _TWO_PI + self.sector_width / 2.0)
                              / self.sector_width)) % self.sectors

    def sector_center(self, index: int) -> float:
        return wrap_angle(index * self.sector_width)


@dataclass
class IirState:
    """First-order smoother omega = a1 * omega_prev + b0 * omega_new.

    a1 + b0 = 1 keeps unit DC gain so a steady command passes through
    unscaled; a1 < 1 keeps the filter stable.
    """

    a1: float = 0.7
    b0: float = 0.3
    omega_prev: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.a1 < 1.0:
            raise ValueError("a1 must lie in [0, 1)")
        if abs(self.a1 + self.b0 - 1.0) > 1e-9:
            raise ValueError("filter must have unit DC gain (a1 + b0 = 1)")


def local_target(pose: Pose, ref_point: tuple[float, float]) -> float:
    """Bearing of a world point in the robot frame."""
    dx = ref_point[0] - pose.x
    dy = ref_point[1] - pose.y
    if math.hypot(dx, dy) < 1e-6:
        raise RefAtOrigin("target coincides with robot position")
    c = math.cos(pose.theta)
    s = math.sin(pose.theta)
    return wrap_angle(math.atan2(-s * dx + c * dy, c * dx + s * dy))


def build_histogram(scan: RangeScan, params: VfhParams) -> PolarHistogram:
    """Accumulate beam evidence into sectors.

    A beam at range r inside the active window contributes
    (active_window - r) / active_window to the sector containing its angle;
    capped (no-hit) beams contribute nothing. With a nonzero
    enlargement_radius the same weight also lands on every sector within
    asin(enlargement_radius / r) of the beam, so close obstacles block fans
    wide enough for the robot body to pass.
    """
    ranges = np.asarray(scan.ranges, dtype=float)
    densities = np.zeros(params.sectors)
    near = (ranges < params.active_window) & (ranges < scan.spec.max_range * (1.0 - 1e-12))
    if not near.any():
        return PolarHistogram(densities=densities, sector_width=params.sector_width)
    angles = scan.spec.local_angles()[near]
    hits = ranges[near]
    weights = (params.active_window - hits) / params.active_window
    width = params.sector_width
    idx = np.floor((angles % _TWO_PI + width / 2.0) / width).astype(int) % params.sectors
    if params.enlargement_radius == 0.0:
        densities += np.bincount(idx, weights=weights, minlength=params.sectors)
    else:
        gamma = np.arcsin(np.minimum(params.enlargement_radius / hits, 1.0))
        spread = np.floor(gamma / width).astype(int)
        for k in np.unique(spread):
            sel = spread == k
            for off in range(-int(k), int(k) + 1):
                densities += np.bincount((idx[sel] + off) % params.sectors,
                                         weights=weights[sel],
                                         minlength=params.sectors)
    return PolarHistogram(densities=densities, sector_width=params.sector_width)


def _valleys(below: np.ndarray) -> list[tuple[int, int]]:
    """Maximal circular runs of True as (start, length) pairs."""
    n = len(below)
    if below.all():
        return [(0, n)]
    if not below.any():
        return []
    # rotate so the scan starts on a blocked sector, making runs non-wrapping
    first_blocked = int(np.argmin(below)) if below[0] else 0
    rot = np.roll(below, -first_blocked)
    runs = []
    start = None
    for i, free in enumerate(rot):
        if free and start is None:
            start = i
        elif not free and start is not None:
            runs.append(((start + first_blocked) % n, i - start))
            start = None
    if start is not None:
        runs.append(((start + first_blocked) % n, n - start))
    return runs


def select_steering(hist: PolarHistogram, theta_tar: float, params: VfhParams,
                    prefer_sign: float | None = None) -> float:
    """Steering direction through the best admissible valley.

    Returns theta_tar unchanged when its sector lies inside a wide-enough
    valley; otherwise steers s_max/2 sectors inside the valley border that is
    angularly closest to the target. ``prefer_sign`` restricts the diverted
    choice to one turning side when candidates exist there, so a caller can
    hold its committed passing side between ticks instead of dithering
    around a head-on obstacle.
    """
    below = hist.densities < params.threshold
    valleys = [v for v in _valleys(below) if v[1] >= params.s_max]
    if not valleys:
        raise NoValley("all directions blocked above threshold")
    target_sector = hist.sector_of(theta_tar)
    n = hist.sectors
    for start, length in valleys:
        if (target_sector - start) % n < length:
            return theta_tar
    candidates = []
    for start, length in valleys:
        for border, into in ((start, 1.0), ((start + length - 1) % n, -1.0)):
            gap = abs(wrap_angle(hist.sector_center(border) - theta_tar))
            steering = wrap_angle(hist.sector_center(border)
                                  + into * (params.s_max / 2.0) * hist.sector_width)
            candidates.append((gap, border, steering))
    if prefer_sign is not None:
        same_side = [c for c in candidates if c[2] * prefer_sign >= 0.0]
        if same_side:
            candidates = same_side
    return min(candidates)[2]


def steer_to_command(
    theta: float, params: VfhParams, omega_max: float = math.inf
) -> VelocityCommand:
    """Pure-pursuit arc through a look-ahead point 1 m along the steering
    direction: omega = 2 v sin(theta).

    Past 90 degrees the arc formula starts shrinking |omega| again, which
    stalls escapes; the magnitude is clamped at its 90-degree peak instead.
    """
    if abs(theta) > math.pi / 2.0:
        omega = math.copysign(2.0 * params.v_const, theta)
    else:
        omega = 2.0 * params.v_const * math.sin(theta)
    return VelocityCommand(
        v=params.v_const,
        omega=min(max(omega, -omega_max), omega_max),
    )


def sharp_turn(theta: float) -> bool:
    return abs(theta) > math.pi / 2.0


def smooth_command(omega_new: float, state: IirState) -> float:
    """One filter step; updates state.omega_prev in place."""
    omega = state.a1 * state.omega_prev + state.b0 * omega_new
    state.omega_prev = omega
    return omega
