"""Drivability, road-containment and collision checks for sampled trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedSampling
from .trajectory import Trajectory


@dataclass(frozen=True, slots=True)
class VehicleParams:
    length: float = 4.5
    width: float = 2.0
    wheelbase: float = 2.7
    max_steering_angle: float = 0.7
    min_turn_radius: float = 4.0
    ax_min: float = -6.0
    ax_max: float = 4.0
    a_lat_max: float = 6.0
    # curvature-continuity proxy, (1/m)/s
    max_curvature_rate: float = 0.5

    def __post_init__(self):
        for name in ("length", "width", "wheelbase", "max_steering_angle", "min_turn_radius",
                     "a_lat_max", "max_curvature_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"VehicleParams.{name} must be > 0")
        if not self.ax_min < 0 < self.ax_max:
            raise ValueError("VehicleParams requires ax_min < 0 < ax_max")

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True, slots=True)
class ValidationResult:
    valid_state: bool = True
    valid_action: bool = True
    collision: bool = False
    first_violation_time: float | None = None

    def __post_init__(self):
        violated = not self.valid_state or not self.valid_action or self.collision
        if violated != (self.first_violation_time is not None):
            raise ValueError("first_violation_time must be set iff a flag indicates a violation")

    @property
    def ok(self) -> bool:
        return self.valid_state and self.valid_action and not self.collision

    def merge(self, other: "ValidationResult") -> "ValidationResult":
        times = [t for t in (self.first_violation_time, other.first_violation_time) if t is not None]
        return ValidationResult(self.valid_state and other.valid_state,
                                self.valid_action and other.valid_action,
                                self.collision or other.collision,
                                min(times) if times else None)


def _first_time(t, mask) -> float | None:
    idx = np.flatnonzero(mask)
    return float(t[idx[0]]) if idx.size else None


def drivability_violations(traj: Trajectory, p: VehicleParams) -> np.ndarray:
    """Boolean mask of samples that break a kinematic or dynamic bound."""
    k = traj.curvature
    bad = np.abs(k) > 1.0 / p.min_turn_radius
    bad |= np.abs(np.arctan(p.wheelbase * k)) > p.max_steering_angle
    bad |= traj.ax < p.ax_min
    bad |= traj.ax > p.ax_max
    bad |= np.abs(traj.ay) > p.a_lat_max
    # a jump between consecutive samples is charged to the later one
    dk = np.abs(np.diff(k)) > p.max_curvature_rate * np.diff(traj.t) + 1e-12
    bad[1:] |= dk
    return bad


def validate_drivability(traj: Trajectory, p: VehicleParams) -> ValidationResult:
    bad = drivability_violations(traj, p)
    t0 = _first_time(traj.t, bad)
    return ValidationResult(valid_action=t0 is None, first_violation_time=t0)


def footprint_y_extent(heading, p: VehicleParams):
    """Half extent of the rotated footprint along the road's lateral axis."""
    return 0.5 * p.length * np.abs(np.sin(heading)) + 0.5 * p.width * np.abs(np.cos(heading))


def off_road_mask(traj: Trajectory, road, p: VehicleParams) -> np.ndarray:
    e = footprint_y_extent(traj.heading, p)
    tol = 1e-9
    return (traj.y - e < -tol) | (traj.y + e > road.width + tol)


def check_on_road(traj: Trajectory, road, p: VehicleParams) -> bool:
    """True iff the footprint stays inside ``0 <= y <= road.width`` (closed) at every sample."""
    return not off_road_mask(traj, road, p).any()


def boxes_overlap(xa, ya, ha, la, wa, xb, yb, hb, lb, wb):
    """Separating-axis test for oriented rectangles, elementwise over arrays.

    Touching rectangles count as overlapping.
    """
    dx = xb - xa
    dy = yb - ya
    ca, sa = np.cos(ha), np.sin(ha)
    cb, sb = np.cos(hb), np.sin(hb)
    rel = hb - ha
    c = np.abs(np.cos(rel))
    s = np.abs(np.sin(rel))
    hla, hwa, hlb, hwb = 0.5 * la, 0.5 * wa, 0.5 * lb, 0.5 * wb
    sep = np.abs(dx * ca + dy * sa) > hla + hlb * c + hwb * s
    sep |= np.abs(-dx * sa + dy * ca) > hwa + hlb * s + hwb * c
    sep |= np.abs(dx * cb + dy * sb) > hlb + hla * c + hwa * s
    sep |= np.abs(-dx * sb + dy * cb) > hwb + hla * s + hwa * c
    return ~sep


def overlap_mask(xa, ya, ha, pa, xb, yb, hb, pb) -> np.ndarray:
    """Per-sample overlap of two footprints, with a bounding-circle prefilter."""
    reach = pa.half_diagonal + pb.half_diagonal
    dx = np.subtract(xb, xa)
    dy = np.subtract(yb, ya)
    near = dx * dx + dy * dy <= reach * reach
    if not near.any():
        return near
    idx = near.nonzero()

    def pick(v):
        return v[idx] if np.ndim(v) else v

    out = np.zeros(near.shape, dtype=bool)
    out[idx] = boxes_overlap(pick(xa), pick(ya), pick(ha), pa.length, pa.width,
                             pick(xb), pick(yb), pick(hb), pb.length, pb.width)
    return out


def same_grid(a: Trajectory, b: Trajectory) -> bool:
    return len(a.t) == len(b.t) and (a.t is b.t or np.array_equal(a.t, b.t))


def check_collision(traj_a: Trajectory, traj_b: Trajectory, pa: VehicleParams,
                    pb: VehicleParams) -> bool:
    """True iff the two footprints overlap at any common sample time.

    Both trajectories must be expressed in the same frame.
    """
    if not same_grid(traj_a, traj_b):
        raise MismatchedSampling("trajectories do not share a time grid")
    return bool(overlap_mask(traj_a.x, traj_a.y, traj_a.heading, pa,
                             traj_b.x, traj_b.y, traj_b.heading, pb).any())

