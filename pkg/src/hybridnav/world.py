"""Occupancy-grid world model: cell states, log-odds scan fusion, obstacle
inflation, and exact grid raycasting.

Grid convention: ``origin`` is the world position of the lower-left corner
of cell (0, 0); cells are addressed as (col, row) tuples while the raster
arrays are indexed ``[row, col]``. ASCII map text is stored top row first.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .kinematics import Pose

FREE = 0
OCCUPIED = 1
UNKNOWN = -1

# Log-odds schedule: a never-seen cell needs three hits before it flips
# OCCUPIED (five misses for FREE); the clamp bounds how much evidence a
# cell can accumulate either way.
L_HIT = 0.85
L_MISS = -0.4
L_OCC = 2.0
L_FREE = -2.0
L_MIN = -5.0
L_MAX = 5.0

_ASCII_STATE = {".": FREE, "#": OCCUPIED, "?": UNKNOWN}
_STATE_ASCII = {FREE: ".", OCCUPIED: "#", UNKNOWN: "?"}

# Slack for distinguishing a terminal cell from a fully-crossed cell when
# replaying measured ranges through the grid walk.
_EPS_RANGE = 1e-7


class OutOfBounds(ValueError):
    """World point maps outside the raster."""


class PoseInObstacle(ValueError):
    """Scan origin sits inside an occupied cell."""


@dataclass
class ScanSpec:
    """Planar range-scanner geometry; beam i points at
    -fov/2 + i * angular_step relative to the robot heading."""

    fov: float = math.radians(270.0)
    beam_count: int = 1080
    max_range: float = 4.0

    def __post_init__(self):
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not (0.0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise ValueError("fov must lie in (0, 2*pi]")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")

    @property
    def angular_step(self) -> float:
        return self.fov / self.beam_count

    def local_angles(self) -> np.ndarray:
        return -self.fov / 2.0 + np.arange(self.beam_count) * self.angular_step


@dataclass
class RangeScan:
    """Ranges per beam, robot-local frame; beams with no hit report exactly
    max_range."""

    ranges: np.ndarray
    spec: ScanSpec

    def min_range(self) -> float:
        return float(self.ranges.min())


@dataclass
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    origin: tuple[float, float]
    states: np.ndarray = field(repr=False)  # int8 [row, col]
    log_odds: np.ndarray = field(repr=False)  # float64 [row, col]
    touched: np.ndarray = field(repr=False)  # bool [row, col]

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")
        expected = (self.height, self.width)
        for name in ("states", "log_odds", "touched"):
            if getattr(self, name).shape != expected:
                raise ValueError(f"{name} raster must have shape {expected}")

    # -- construction ------------------------------------------------------

    @classmethod
    def empty(cls, width: int, height: int, resolution: float,
              origin: tuple[float, float] = (0.0, 0.0)) -> "OccupancyGrid":
        """All-UNKNOWN grid (no cell has ever been updated)."""
        return cls(
            width=width,
            height=height,
            resolution=resolution,
            origin=origin,
            states=np.full((height, width), UNKNOWN, dtype=np.int8),
            log_odds=np.zeros((height, width)),
            touched=np.zeros((height, width), dtype=bool),
        )

    @classmethod
    def from_ascii(cls, lines: list[str], resolution: float,
                   origin: tuple[float, float] = (0.0, 0.0)) -> "OccupancyGrid":
        """Build a grid from ASCII rows (first line is the top row).

        '.' = FREE, '#' = OCCUPIED, '?' = UNKNOWN. Known cells get saturated
        log-odds so a single fresh observation cannot flip them.
        """
        if not lines:
            raise ValueError("ASCII map needs at least one row")
        width = len(lines[0])
        if any(len(row) != width for row in lines):
            raise ValueError("ASCII map rows must have equal length")
        height = len(lines)
        states = np.empty((height, width), dtype=np.int8)
        for i, row in enumerate(lines):
            try:
                states[height - 1 - i] = [_ASCII_STATE[ch] for ch in row]
            except KeyError as exc:
                raise ValueError(f"unknown map character {exc.args[0]!r}") from exc
        log_odds = np.zeros((height, width))
        log_odds[states == OCCUPIED] = L_MAX
        log_odds[states == FREE] = L_MIN
        touched = states != UNKNOWN
        return cls(width, height, resolution, origin, states, log_odds, touched)

    def to_ascii(self) -> list[str]:
        """ASCII rows, top row first (inverse of from_ascii)."""
        return [
            "".join(_STATE_ASCII[int(s)] for s in self.states[r])
            for r in range(self.height - 1, -1, -1)
        ]

    @classmethod
    def load(cls, path) -> "OccupancyGrid":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().split()
            if len(header) != 7 or header[0] != "ogrid" or header[1] != "v1":
                raise ValueError(f"{path}: not an ogrid v1 file")
            width, height = int(header[2]), int(header[3])
            resolution = float(header[4])
            origin = (float(header[5]), float(header[6]))
            lines = [fh.readline().rstrip("\n") for _ in range(height)]
        grid = cls.from_ascii(lines, resolution, origin)
        if grid.width != width or grid.height != height:
            raise ValueError(f"{path}: header size does not match body")
        return grid

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(
                f"ogrid v1 {self.width} {self.height} {self.resolution!r} "
                f"{self.origin[0]!r} {self.origin[1]!r}\n"
            )
            for row in self.to_ascii():
                fh.write(row + "\n")

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(
            self.width, self.height, self.resolution, self.origin,
            self.states.copy(), self.log_odds.copy(), self.touched.copy(),
        )

    # -- geometry ----------------------------------------------------------

    def world_to_cell(self, p: tuple[float, float]) -> tuple[int, int]:
        """(col, row) of the cell containing world point p; raises OutOfBounds."""
        col = math.floor((p[0] - self.origin[0]) / self.resolution)
        row = math.floor((p[1] - self.origin[1]) / self.resolution)
        if not (0 <= col < self.width and 0 <= row < self.height):
            raise OutOfBounds(f"point {p} outside {self.width}x{self.height} raster")
        return (col, row)

    def cell_center(self, cell: tuple[int, int]) -> tuple[float, float]:
        col, row = cell
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def contains(self, p: tuple[float, float]) -> bool:
        try:
            self.world_to_cell(p)
            return True
        except OutOfBounds:
            return False

    def state_at(self, p: tuple[float, float]) -> int:
        col, row = self.world_to_cell(p)
        return int(self.states[row, col])

    def occupied_cells(self) -> np.ndarray:
        """(N, 2) array of world centers of all OCCUPIED cells."""
        rows, cols = np.nonzero(self.states == OCCUPIED)
        centers = np.empty((rows.size, 2))
        centers[:, 0] = self.origin[0] + (cols + 0.5) * self.resolution
        centers[:, 1] = self.origin[1] + (rows + 0.5) * self.resolution
        return centers

    def checksum(self) -> int:
        """CRC32 of the state raster (row-major int8 bytes)."""
        return zlib.crc32(self.states.tobytes()) & 0xFFFFFFFF

    # -- belief update -----------------------------------------------------

    def recompute_states(self) -> None:
        """States are a pure function of (log_odds, touched): OCCUPIED above
        L_OCC, FREE below L_FREE, UNKNOWN otherwise or when never updated."""
        states = np.full((self.height, self.width), UNKNOWN, dtype=np.int8)
        states[self.touched & (self.log_odds > L_OCC)] = OCCUPIED
        states[self.touched & (self.log_odds < L_FREE)] = FREE
        self.states = states

    def update_from_scan(self, pose: Pose, scan: RangeScan) -> None:
        """Fuse one scan: cells crossed before each beam endpoint get L_MISS,
        the endpoint cell gets L_HIT unless the beam was range-capped.
        Beam segments outside the raster are clipped silently.
        """
        angles = pose.theta + scan.spec.local_angles()
        free_idx, hit_idx = _collect_cells(
            self.states, self.origin, self.resolution,
            pose.x, pose.y, angles,
            np.asarray(scan.ranges, dtype=float), scan.spec.max_range,
        )
        size = self.height * self.width
        delta = np.zeros(size)
        counts = np.zeros(size, dtype=np.int64)
        if free_idx.size:
            c = np.bincount(free_idx, minlength=size)
            delta += L_MISS * c
            counts += c
        if hit_idx.size:
            c = np.bincount(hit_idx, minlength=size)
            delta += L_HIT * c
            counts += c
        flat = self.log_odds.reshape(-1)
        flat += delta
        np.clip(flat, L_MIN, L_MAX, out=flat)
        self.touched.reshape(-1)[counts > 0] = True
        self.recompute_states()


# -- raycasting -------------------------------------------------------------


def raycast_scan(pose: Pose, grid: OccupancyGrid, spec: ScanSpec) -> RangeScan:
    """Simulate a range scan: per beam, the distance to the boundary of the
    first OCCUPIED cell, capped at max_range. UNKNOWN cells are traversable.
    """
    col, row = grid.world_to_cell((pose.x, pose.y))
    if grid.states[row, col] == OCCUPIED:
        raise PoseInObstacle(f"scan origin ({pose.x:.3f}, {pose.y:.3f}) is occupied")
    angles = pose.theta + spec.local_angles()
    ranges = _cast_ranges(
        grid.states, grid.origin, grid.resolution, pose.x, pose.y, angles, spec.max_range
    )
    return RangeScan(ranges=ranges, spec=spec)


def _walk_setup(origin, resolution, px, py, angles):
    """Initial cell, step direction, and boundary-crossing distances for a
    bundle of rays sharing one origin (amanatides-style grid walk)."""
    n = angles.shape[0]
    dx = np.cos(angles)
    dy = np.sin(angles)
    col = math.floor((px - origin[0]) / resolution)
    row = math.floor((py - origin[1]) / resolution)
    cx = np.full(n, col, dtype=np.int64)
    cy = np.full(n, row, dtype=np.int64)
    step_x = np.where(dx > 0, 1, -1).astype(np.int64)
    step_y = np.where(dy > 0, 1, -1).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tdx = resolution / np.abs(dx)
        tdy = resolution / np.abs(dy)
        bx = origin[0] + (col + (step_x > 0)) * resolution
        by = origin[1] + (row + (step_y > 0)) * resolution
        tmx = np.where(dx != 0.0, (bx - px) / dx, np.inf)
        tmy = np.where(dy != 0.0, (by - py) / dy, np.inf)
    return cx, cy, step_x, step_y, tmx, tmy, tdx, tdy


def _cast_ranges(states, origin, resolution, px, py, angles, cap):
    h, w = states.shape
    n = angles.shape[0]
    cx, cy, step_x, step_y, tmx, tmy, tdx, tdy = _walk_setup(
        origin, resolution, px, py, angles
    )
    ranges = np.full(n, cap)
    alive = np.ones(n, dtype=bool)
    while alive.any():
        use_x = tmx < tmy
        t = np.where(use_x, tmx, tmy)
        # rays whose next boundary lies beyond the cap never hit
        alive &= t <= cap
        step = alive
        cx = np.where(step & use_x, cx + step_x, cx)
        cy = np.where(step & ~use_x, cy + step_y, cy)
        inside = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        alive &= inside
        gathered = states[np.clip(cy, 0, h - 1), np.clip(cx, 0, w - 1)]
        hit = alive & (gathered == OCCUPIED)
        ranges[hit] = t[hit]
        alive &= ~hit
        tmx = np.where(step & use_x, tmx + tdx, tmx)
        tmy = np.where(step & ~use_x, tmy + tdy, tmy)
    return ranges


def _collect_cells(states, origin, resolution, px, py, angles, stop_ranges, max_range):
    """Replay measured ranges through the grid walk.

    Returns flat indices of cells fully crossed before each endpoint (misses)
    and of endpoint cells for beams that actually hit (range < max_range).
    """
    h, w = states.shape
    n = angles.shape[0]
    cx, cy, step_x, step_y, tmx, tmy, tdx, tdy = _walk_setup(
        origin, resolution, px, py, angles
    )
    is_hit = stop_ranges < max_range - _EPS_RANGE
    free_chunks: list[np.ndarray] = []
    hit_chunks: list[np.ndarray] = []
    col0 = math.floor((px - origin[0]) / resolution)
    row0 = math.floor((py - origin[1]) / resolution)
    alive = np.ones(n, dtype=bool)
    if not (0 <= col0 < w and 0 <= row0 < h):
        alive[:] = False
    while alive.any():
        t_next = np.minimum(tmx, tmy)
        crossed = alive & (t_next <= stop_ranges + _EPS_RANGE)
        terminal = alive & ~crossed
        if crossed.any():
            free_chunks.append((cy[crossed] * w + cx[crossed]))
        if terminal.any():
            flat = cy[terminal] * w + cx[terminal]
            term_hit = is_hit[terminal]
            hit_chunks.append(flat[term_hit])
            free_chunks.append(flat[~term_hit])
            alive &= ~terminal
        use_x = tmx < tmy
        cx = np.where(crossed & use_x, cx + step_x, cx)
        cy = np.where(crossed & ~use_x, cy + step_y, cy)
        tmx = np.where(crossed & use_x, tmx + tdx, tmx)
        tmy = np.where(crossed & ~use_x, tmy + tdy, tmy)
        # clip beams that left the raster
        alive &= (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
    free_idx = np.concatenate(free_chunks) if free_chunks else np.empty(0, dtype=np.int64)
    hit_idx = np.concatenate(hit_chunks) if hit_chunks else np.empty(0, dtype=np.int64)
    return free_idx, hit_idx


# -- planning mask ----------------------------------------------------------


def inflate(grid: OccupancyGrid, radius: float, block_unknown: bool = True) -> np.ndarray:
    """Binary planning mask: blocked where any OCCUPIED cell center lies
    within ``radius`` meters. UNKNOWN cells are blocked outright (conservative
    planning); they do not grow inflation discs of their own.
    """
    if radius < 0.0:
        raise ValueError("inflation radius must be >= 0")
    occ = grid.states == OCCUPIED
    r_cells = radius / grid.resolution
    reach = int(math.floor(r_cells + 1e-9))
    if reach == 0:
        blocked = occ.copy()
    else:
        offs = np.arange(-reach, reach + 1)
        disc = offs[None, :] ** 2 + offs[:, None] ** 2 <= r_cells * r_cells + 1e-9
        blocked = ndimage.binary_dilation(occ, structure=disc)
    if block_unknown:
        blocked |= grid.states == UNKNOWN
    return blocked
