"""Jerk-minimal quintic motion primitives.

An action ``(dv, dy)`` is turned into a pair of quintic polynomials, one per
road axis, joining the current kinematic state to a terminal state with zero
longitudinal acceleration and zero lateral velocity/acceleration.  The
longitudinal end position follows from the mean of start and end speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import NegativeTerminalSpeed, NonPositiveDuration

DEFAULT_DURATION = 2.0
DEFAULT_DT = 0.1
EPS_SPEED = 0.1


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Kinematic state in the agent's own road frame (x along travel, y to the left)."""

    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    heading: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True, slots=True)
class Action:
    dv: float
    dy: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.dv, self.dy)


def solve_quintic(p0, v0, a0, p1, v1, a1, T) -> np.ndarray:
    """Coefficients ``c0..c5`` of the quintic matching position, velocity and
    acceleration at ``t=0`` and ``t=T``."""
    if not T > 0:
        raise NonPositiveDuration(f"duration must be > 0, got {T}")
    T2 = T * T
    T3 = T2 * T
    h = p1 - p0
    c3 = (20.0 * h - (8.0 * v1 + 12.0 * v0) * T - (3.0 * a0 - a1) * T2) / (2.0 * T3)
    c4 = (-30.0 * h + (14.0 * v1 + 16.0 * v0) * T + (3.0 * a0 - 2.0 * a1) * T2) / (2.0 * T3 * T)
    c5 = (12.0 * h - 6.0 * (v1 + v0) * T + (a1 - a0) * T2) / (2.0 * T3 * T2)
    return np.array([p0, v0, 0.5 * a0, c3, c4, c5], dtype=float)


def polyval(coeffs, t, order: int = 0):
    """Evaluate the ``order``-th derivative of an ascending-power polynomial."""
    c = np.asarray(coeffs, dtype=float)
    for _ in range(order):
        c = c[1:] * np.arange(1, len(c))
    return np.polynomial.polynomial.polyval(t, c)


@dataclass(frozen=True, eq=False)
class QuinticPair:
    cx: np.ndarray
    cy: np.ndarray
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise NonPositiveDuration(f"duration must be > 0, got {self.duration}")


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    t: float
    state: VehicleState
    curvature: float


def curvature_at(vx: float, vy: float, ax: float, ay: float, eps_speed: float = EPS_SPEED) -> float:
    """Signed path curvature; 0 at or below ``eps_speed``."""
    sq = vx * vx + vy * vy
    if sq <= eps_speed * eps_speed:
        return 0.0
    return (vx * ay - vy * ax) / sq ** 1.5


def _curvature(vx, vy, ax, ay, eps_speed):
    sq = vx * vx + vy * vy
    fast = sq > eps_speed * eps_speed
    out = np.zeros_like(sq)
    np.divide(vx * ay - vy * ax, sq ** 1.5, out=out, where=fast)
    return out


@lru_cache(maxsize=64)
def sample_times(T: float, dt: float) -> np.ndarray:
    """0, dt, 2dt, ... up to and always including T."""
    if not T > 0:
        raise NonPositiveDuration(f"duration must be > 0, got {T}")
    if not (0 < dt <= T):
        raise ValueError(f"sample step must satisfy 0 < dt <= T, got dt={dt}, T={T}")
    n = int(math.floor(T / dt + 1e-9))
    t = np.arange(n + 1, dtype=float) * dt
    if T - t[-1] > 1e-9 * T:
        t = np.append(t, T)
    else:
        t[-1] = T
    t.setflags(write=False)
    return t


@lru_cache(maxsize=64)
def _basis(T: float, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = sample_times(T, dt)
    j = np.arange(6)
    p0 = t[:, None] ** j
    p1 = np.zeros_like(p0)
    p2 = np.zeros_like(p0)
    p1[:, 1:] = j[1:] * t[:, None] ** (j[1:] - 1)
    p2[:, 2:] = j[2:] * (j[2:] - 1) * t[:, None] ** (j[2:] - 2)
    for m in (p0, p1, p2):
        m.setflags(write=False)
    return p0, p1, p2


class Trajectory:
    """Time-sampled quintic pair.

    Samples are kept as numpy arrays (``t, x, y, vx, vy, ax, ay, heading,
    curvature``); :attr:`points` gives the per-sample record view.
    """

    def __init__(self, t, x, y, vx, vy, ax, ay, heading, curvature,
                 source_action, quintics, initial_state, terminal_state, dt):
        self.t = t
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.ax = ax
        self.ay = ay
        self.heading = heading
        self.curvature = curvature
        self.source_action = source_action
        self.quintics = quintics
        self.initial_state = initial_state
        self.terminal_state = terminal_state
        self.dt = dt

    @property
    def duration(self) -> float:
        return self.quintics.duration

    def __len__(self) -> int:
        return len(self.t)

    @cached_property
    def points(self) -> tuple[TrajectoryPoint, ...]:
        pts = []
        for k in range(len(self.t)):
            s = VehicleState(float(self.x[k]), float(self.y[k]), float(self.vx[k]),
                             float(self.vy[k]), float(self.ax[k]), float(self.ay[k]),
                             float(self.heading[k]))
            pts.append(TrajectoryPoint(float(self.t[k]), s, float(self.curvature[k])))
        return tuple(pts)


def _headings(vx, vy, initial, eps_speed):
    h = np.arctan2(vy, vx)
    slow = vx * vx + vy * vy <= eps_speed * eps_speed
    h[0] = initial
    if slow.any():
        for k in range(1, len(h)):
            if slow[k]:
                h[k] = h[k - 1]
    return h


def action_to_trajectory(s: VehicleState, a: Action, T: float = DEFAULT_DURATION,
                         dt: float = DEFAULT_DT, eps_speed: float = EPS_SPEED) -> Trajectory:
    """Build the jerk-minimal trajectory realising action ``a`` from state ``s``."""
    if not T > 0:
        raise NonPositiveDuration(f"duration must be > 0, got {T}")
    vx1 = s.vx + a.dv
    if vx1 < 0.0:
        if vx1 > -1e-12:
            vx1 = 0.0
        else:
            raise NegativeTerminalSpeed(f"terminal speed {vx1:.6g} < 0 (vx={s.vx}, dv={a.dv})")
    x1 = s.x + 0.5 * (s.vx + vx1) * T
    y1 = s.y + a.dy
    cx = solve_quintic(s.x, s.vx, s.ax, x1, vx1, 0.0, T)
    cy = solve_quintic(s.y, s.vy, s.ay, y1, 0.0, 0.0, T)
    t = sample_times(T, dt)
    p0, p1, p2 = _basis(T, dt)
    C = np.column_stack((cx, cy))
    pos = p0 @ C
    vel = p1 @ C
    acc = p2 @ C
    x, y = pos[:, 0], pos[:, 1]
    vx, vy = vel[:, 0], vel[:, 1]
    ax, ay = acc[:, 0], acc[:, 1]
    # pin both ends to the exact boundary values
    x[0], y[0], vx[0], vy[0], ax[0], ay[0] = s.x, s.y, s.vx, s.vy, s.ax, s.ay
    x[-1], y[-1], vx[-1], vy[-1], ax[-1], ay[-1] = x1, y1, vx1, 0.0, 0.0, 0.0
    heading = _headings(vx, vy, s.heading, eps_speed)
    curvature = _curvature(vx, vy, ax, ay, eps_speed)
    terminal = VehicleState(x1, y1, vx1, 0.0, 0.0, 0.0, float(heading[-1]))
    return Trajectory(t, x, y, vx, vy, ax, ay, heading, curvature, a,
                      QuinticPair(cx, cy, T), s, terminal, dt)
