"""Bridge between the tree search and the driving world."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..config import SearchConfig
from ..environment import Scenario, clamped_lane_index, global_pose, step
from ..reward import action_cost, cooperative_rewards, state_reward, validation_reward
from ..trajectory import Action, Trajectory, VehicleState, action_to_trajectory
from ..validation import ValidationResult, drivability_violations, off_road_mask, overlap_mask
from .tree import GROUPS, N_GROUPS, group_index, group_region

KEEP = Action(0.0, 0.0)
TRAJECTORY_CACHE = 20000


@dataclass(frozen=True)
class Transition:
    next_state: tuple[VehicleState, ...]
    rewards: np.ndarray  # cooperative reward per agent
    terminal: bool


@dataclass(frozen=True)
class StepOutcome:
    """Fully itemised world step, as logged by the simulator."""

    next_state: tuple[VehicleState, ...]
    trajectories: tuple[Trajectory, ...]
    validations: tuple[ValidationResult, ...]
    state_rewards: np.ndarray
    action_rewards: np.ndarray
    validation_rewards: np.ndarray
    immediate: np.ndarray
    cooperative: np.ndarray


class DrivingModel:
    """World model used inside one agent's search.

    ``searched`` lists the agent indices whose actions are searched over; all
    other agents are scripted to keep their velocity and lane.
    """

    def __init__(self, scenario: Scenario, cfg: SearchConfig | None = None,
                 searched: Sequence[int] | None = None):
        self.scenario = scenario
        self.cfg = cfg if cfg is not None else scenario.search
        self.road = scenario.road
        self.agents = scenario.agents
        self.n_agents = len(scenario.agents)
        self.searched = tuple(range(self.n_agents)) if searched is None else tuple(searched)
        self.lambdas = np.array([a.lam for a in scenario.agents])
        self.weights = scenario.weights
        # the same (state, action) pairs recur across iterations, especially
        # keep-velocity predictions and braking checks
        self._trajectory = lru_cache(maxsize=TRAJECTORY_CACHE)(self._build_trajectory)

    # -- action space -----------------------------------------------------

    def action_box(self, joint_state, i: int):
        """Configured action bounds, cut so that vx stays >= 0 and the target stays on the road."""
        cfg = self.cfg
        s = joint_state[i]
        half = self.agents[i].params.width / 2
        lo = max(cfg.dy_bounds[0], min(0.0, half - s.y))
        hi = min(cfg.dy_bounds[1], max(0.0, self.road.width - half - s.y))
        return (max(cfg.dv_bounds[0], -s.vx), cfg.dv_bounds[1], lo, hi)

    def group_of(self, joint_state, i: int, a: Action) -> int:
        return group_index(joint_state[i], a, self.road, self.cfg.eps_dv)

    def group_region(self, joint_state, i: int, g: int):
        return group_region(joint_state[i], GROUPS[g], self.road, self.action_box(joint_state, i),
                            self.cfg.eps_dv)

    def initial_actions(self, joint_state, i: int) -> list[Action]:
        """Coarse seeds inside the action box: keep, speed up, slow down, one lane left or right."""
        s = joint_state[i]
        step_v = self.cfg.dv_step
        w = self.road.lane_width
        cand = [KEEP, Action(step_v, 0.0), Action(-step_v, 0.0), Action(0.0, w), Action(0.0, -w)]
        dv_lo, dv_hi, dy_lo, dy_hi = self.action_box(joint_state, i)
        return [a for a in cand if dv_lo <= a.dv <= dv_hi and dy_lo <= a.dy <= dy_hi]

    def default_action(self, joint_state, i: int) -> Action:
        return KEEP

    # -- dynamics ---------------------------------------------------------

    def trajectory(self, s: VehicleState, a: Action) -> Trajectory:
        return self._trajectory(s, a)

    def _build_trajectory(self, s: VehicleState, a: Action) -> Trajectory:
        return action_to_trajectory(s, a, self.cfg.duration, self.cfg.dt)

    def evaluate(self, joint_state, joint_action: Sequence[Action],
                 trajectories: Sequence[Trajectory] | None = None) -> StepOutcome:
        if trajectories is None:
            trajectories = [self.trajectory(s, a) for s, a in zip(joint_state, joint_action)]
        nxt, results = step(joint_state, trajectories, self.road, self.scenario.obstacles, self.agents)
        road, w = self.road, self.weights
        n = self.n_agents
        sr = np.empty(n)
        ar = np.empty(n)
        vr = np.empty(n)
        for i, (spec, s0, s1, tr, res) in enumerate(zip(self.agents, joint_state, nxt,
                                                        trajectories, results)):
            y = min(max(s1.y, 0.0), road.width)
            probe = s1 if y == s1.y else VehicleState(s1.x, y, s1.vx)
            sr[i] = state_reward(probe, spec.desired, road, w)
            changed = clamped_lane_index(s1.y, road) != clamped_lane_index(s0.y, road)
            ar[i] = action_cost(tr, changed, w)
            vr[i] = validation_reward(res, w)
        imm = sr + ar + vr
        return StepOutcome(nxt, tuple(trajectories), tuple(results), sr, ar, vr, imm,
                           cooperative_rewards(imm, self.lambdas))

    def _terminal(self, results) -> bool:
        return any(results[i].collision for i in self.searched)

    def transition(self, joint_state, joint_action, trajectories=None) -> Transition:
        out = self.evaluate(joint_state, joint_action, trajectories)
        return Transition(out.next_state, out.cooperative, self._terminal(out.validations))

    # -- rollout policy ---------------------------------------------------

    def representatives(self, s: VehicleState) -> list[Action | None]:
        """One action per semantic group (None where the target lane does not exist)."""
        road = self.road
        k = clamped_lane_index(s.y, road)
        lat = {"": 0.0,
               "L": road.lane_center(k + 1) - s.y if k + 1 < road.lane_count else None,
               "R": road.lane_center(k - 1) - s.y if k >= 1 else None}
        lon = {"": 0.0, "+": self.cfg.dv_step, "-": -self.cfg.dv_step}
        reps = []
        for g in GROUPS:
            dy = lat[g[0] if g[0] in "LR" else ""]
            dv = lon[g[-1] if g[-1] in "+-" else ""]
            reps.append(None if dy is None else Action(dv, dy))
        return reps

    def admissible(self, i: int, tr: Trajectory, others=()) -> bool:
        """Drivable, on the road, clear of the parked obstacles and of ``others``,
        and able to brake to a standstill without hitting anything.

        ``others`` holds ``(j, trajectory)`` pairs already fixed for this step;
        after it they are assumed to keep their velocity.
        """
        spec = self.agents[i]
        p = spec.params
        if drivability_violations(tr, p).any() or off_road_mask(tr, self.road, p).any():
            return False
        if self._hits(i, tr, others):
            return False
        return self._can_stop(i, tr.terminal_state, others)

    def _hits(self, i: int, tr: Trajectory, others) -> bool:
        spec = self.agents[i]
        p = spec.params
        x, y, h = global_pose(tr.x, tr.y, tr.heading, spec.direction, self.road)
        if any(overlap_mask(x, y, h, p, ob.x, ob.y, ob.heading, ob).any()
               for ob in self.scenario.obstacles):
            return True
        for j, other in others:
            ox, oy, oh = global_pose(other.x, other.y, other.heading, self.agents[j].direction, self.road)
            if overlap_mask(x, y, h, p, ox, oy, oh, self.agents[j].params).any():
                return True
        return False

    def _can_stop(self, i: int, s: VehicleState, others) -> bool:
        """Whether repeated hard braking from ``s`` comes to rest without a collision."""
        while s.vx > 0:
            tr = self.trajectory(s, Action(max(self.cfg.dv_bounds[0], -s.vx), 0.0))
            others = [(j, self.trajectory(o.terminal_state, KEEP)) for j, o in others]
            if self._hits(i, tr, others):
                return False
            s = tr.terminal_state
        return True

    def rollout_action(self, s: VehicleState, i: int, rng: np.random.Generator, others=()):
        """Draw an action and its trajectory from the default policy.

        Draws that are not admissible are redrawn; when every draw fails the
        agent brakes as hard as allowed, then tries each group representative
        in turn, and keeps its velocity if nothing is admissible.
        """
        cfg = self.cfg
        reps = None
        for _ in range(cfg.rollout_resamples):
            if rng.random() < cfg.rollout_keep_prob:
                a = KEEP
            else:
                if reps is None:
                    reps = self.representatives(s)
                a = reps[1 + int(rng.integers(N_GROUPS - 1))]
                if a is None or s.vx + a.dv < 0:
                    continue
            tr = self.trajectory(s, a)
            if self.admissible(i, tr, others):
                return a, tr
        if reps is None:
            reps = self.representatives(s)
        brake = Action(max(cfg.dv_bounds[0], -s.vx), 0.0)
        for a in [brake] + [r for r in reps if r is not None and s.vx + r.dv >= 0]:
            tr = self.trajectory(s, a)
            if self.admissible(i, tr, others):
                return a, tr
        return KEEP, self.trajectory(s, KEEP)

    def rollout_step(self, joint_state, rng: np.random.Generator) -> Transition:
        n = self.n_agents
        actions = [self.default_action(joint_state, i) for i in range(n)]
        trajs = [self.trajectory(s, a) for s, a in zip(joint_state, actions)]
        # searched agents draw in turn, each giving way to the motion already
        # fixed for the others (scripted agents and not yet drawn ones keep velocity)
        for i in self.searched:
            others = [(j, trajs[j]) for j in range(n) if j != i]
            actions[i], trajs[i] = self.rollout_action(joint_state[i], i, rng, others)
        return self.transition(joint_state, actions, trajs)
