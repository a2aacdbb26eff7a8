"""Per-agent immediate rewards and the cooperative return signal."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OffRoadState
from .trajectory import Trajectory, VehicleState
from .validation import ValidationResult


@dataclass(frozen=True, slots=True)
class RewardWeights:
    w_v: float = 1.0
    w_lane: float = 5.0
    w_center: float = 0.5
    w_ax: float = 0.2
    w_ay: float = 0.2
    w_lanechange: float = 1.0
    # penalties are stored as the (non-positive) reward they contribute
    r_invalid_state: float = -500.0
    r_invalid_action: float = -200.0
    r_collision: float = -1000.0

    def __post_init__(self):
        for name in ("w_v", "w_lane", "w_center", "w_ax", "w_ay", "w_lanechange"):
            if getattr(self, name) < 0:
                raise ValueError(f"RewardWeights.{name} must be >= 0")
        for name in ("r_invalid_state", "r_invalid_action", "r_collision"):
            if getattr(self, name) > 0:
                raise ValueError(f"RewardWeights.{name} must be <= 0")


@dataclass(frozen=True, slots=True)
class DesiredState:
    v_des: float
    k_des: int

    def __post_init__(self):
        if self.v_des < 0:
            raise ValueError("v_des must be >= 0")


def state_reward(s: VehicleState, d: DesiredState, road, w: RewardWeights) -> float:
    """Negative weighted deviation from the desired speed, lane and lane centre."""
    if not road.contains(s.y):
        raise OffRoadState(f"y={s.y} outside road [0, {road.width}]")
    k = road.lane_index(s.y)
    return -(w.w_v * abs(s.vx - d.v_des)
             + w.w_lane * abs(k - d.k_des)
             + w.w_center * abs(s.y - road.lane_center(k)))


def squared_accel_integral(coeffs, T: float) -> float:
    """Exact integral of the squared second derivative of a quintic over [0, T]."""
    c = np.asarray(coeffs, dtype=float)
    acc = c[2:] * np.array([2.0, 6.0, 12.0, 20.0])
    sq = np.convolve(acc, acc)
    powers = np.arange(1, len(sq) + 1)
    return float(np.sum(sq * T ** powers / powers))


def action_cost(traj: Trajectory, lane_changed: bool, w: RewardWeights) -> float:
    q = traj.quintics
    cost = (w.w_ax * squared_accel_integral(q.cx, q.duration)
            + w.w_ay * squared_accel_integral(q.cy, q.duration))
    if lane_changed:
        cost += w.w_lanechange
    return -cost


def validation_reward(vr: ValidationResult, w: RewardWeights) -> float:
    r = 0.0
    if not vr.valid_state:
        r += w.r_invalid_state
    if not vr.valid_action:
        r += w.r_invalid_action
    if vr.collision:
        r += w.r_collision
    return r


def immediate_reward(state_r: float, action_r: float, validation_r: float) -> float:
    return state_r + action_r + validation_r


def cooperative_reward(rewards: Sequence[float], i: int, lambda_i: float) -> float:
    """Own reward plus ``lambda_i`` times everybody else's."""
    if not 0 <= i < len(rewards):
        raise IndexError(f"agent index {i} out of range for {len(rewards)} agents")
    if not 0.0 <= lambda_i <= 1.0:
        raise ValueError("cooperation factor must lie in [0, 1]")
    others = sum(r for j, r in enumerate(rewards) if j != i)
    return rewards[i] + lambda_i * others


def cooperative_rewards(rewards, lambdas) -> np.ndarray:
    """Vectorised :func:`cooperative_reward` for every agent at once."""
    r = np.asarray(rewards, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    return r + lam * (r.sum() - r)
