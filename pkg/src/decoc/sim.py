"""Closed-loop decentralized execution of the planner."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SearchConfig
from .environment import COOPERATIVE, CONSTANT_VELOCITY, PREDICTION_MODES, Scenario
from .search.mcts import MCTS
from .search.model import KEEP, DrivingModel
from .search.tree import GROUPS
from .trajectory import Action, VehicleState
from .validation import ValidationResult

log = logging.getLogger(__name__)

DEFAULT_STEPS = 15


@dataclass(frozen=True)
class StepRecord:
    """One executed step: the state it started from and everything it produced."""

    time: float
    states: tuple[VehicleState, ...]
    actions: tuple[Action, ...]
    groups: tuple[str, ...]
    state_rewards: tuple[float, ...]
    action_rewards: tuple[float, ...]
    validation_rewards: tuple[float, ...]
    immediate: tuple[float, ...]
    validations: tuple[ValidationResult, ...]
    # dense speed samples over the step, one row per agent
    t: np.ndarray = field(repr=False)
    vx: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Metrics:
    velocity_deviation: float
    min_speed: tuple[float, ...]
    collision_count: int
    steps_completed: int

    def as_record(self) -> dict:
        rec = {"velocity_deviation": self.velocity_deviation,
               "collision_count": self.collision_count,
               "steps_completed": self.steps_completed}
        for i, v in enumerate(self.min_speed):
            rec[f"min_speed_{i}"] = v
        return rec


@dataclass
class SimulationTrace:
    scenario: Scenario
    prediction: str | None
    seed: int
    steps: list[StepRecord] = field(default_factory=list)
    final_state: tuple[VehicleState, ...] = ()
    final_time: float = 0.0
    metrics: Metrics | None = None

    @property
    def collided(self) -> bool:
        return any(v.collision for rec in self.steps for v in rec.validations)


def planners_for(scenario: Scenario, prediction: str | None, ego: int = 0) -> dict[int, tuple[int, ...]]:
    """Map each planning agent index to the agent indices its search covers.

    Agents missing from the result are scripted to keep velocity and lane.
    With ``prediction=None`` every agent plans using its own prediction mode.
    """
    n = len(scenario.agents)
    if prediction == CONSTANT_VELOCITY:
        return {ego: (ego,)}
    if prediction == COOPERATIVE:
        return {i: tuple(range(n)) for i in range(n)}
    if prediction is not None:
        raise ValueError(f"unknown prediction mode {prediction!r}; valid choices: {PREDICTION_MODES}")
    return {i: (i,) if a.prediction_mode == CONSTANT_VELOCITY else tuple(range(n))
            for i, a in enumerate(scenario.agents)}


def run(scenario: Scenario, steps: int = DEFAULT_STEPS, cfg: SearchConfig | None = None,
        seed: int = 0, prediction: str | None = None, ego: int = 0) -> SimulationTrace:
    """Simulate ``steps`` planning cycles, stopping early after a collision."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    cfg = cfg if cfg is not None else scenario.search
    plans = planners_for(scenario, prediction, ego)
    searches = {}
    for i, covered in plans.items():
        agent_cfg = replace(cfg, seed=seed + scenario.agents[i].id)
        model = DrivingModel(scenario, agent_cfg, covered)
        searches[i] = MCTS(model, agent_cfg, np.random.default_rng(agent_cfg.seed))
    world = DrivingModel(scenario, cfg)

    trace = SimulationTrace(scenario, prediction, seed)
    state = scenario.initial_state
    time = 0.0
    for k in range(steps):
        actions = []
        for i in range(len(scenario.agents)):
            if i in searches:
                actions.append(searches[i].search(state).best[i])
            else:
                actions.append(KEEP)
        out = world.evaluate(state, actions)
        groups = tuple(GROUPS[world.group_of(state, i, a)] for i, a in enumerate(actions))
        trajs = out.trajectories
        trace.steps.append(StepRecord(
            time, tuple(state), tuple(actions), groups,
            tuple(map(float, out.state_rewards)), tuple(map(float, out.action_rewards)),
            tuple(map(float, out.validation_rewards)), tuple(map(float, out.immediate)),
            out.validations, time + trajs[0].t, np.stack([tr.vx for tr in trajs])))
        log.info("step %d t=%.1f actions=%s", k, time, [(round(a.dv, 3), round(a.dy, 3)) for a in actions])
        state = out.next_state
        time += cfg.duration
        if any(v.collision for v in out.validations):
            log.info("collision at step %d; stopping", k)
            break
    trace.final_state = tuple(state)
    trace.final_time = time
    trace.metrics = compute_metrics(trace)
    return trace


def compute_metrics(trace: SimulationTrace) -> Metrics:
    """Integrate |vx - v_des| over the dense speed samples of every step."""
    agents = trace.scenario.agents
    n = len(agents)
    v_des = np.array([a.desired.v_des for a in agents])
    if not trace.steps:
        v0 = np.array([s.vx for s in trace.final_state]) if trace.final_state else np.zeros(n)
        return Metrics(0.0, tuple(map(float, v0)), 0, 0)
    dev = 0.0
    vmin = np.full(n, np.inf)
    collisions = 0
    for rec in trace.steps:
        err = np.abs(rec.vx - v_des[:, None])
        dev += float(np.trapezoid(err, rec.t, axis=1).sum())
        vmin = np.minimum(vmin, rec.vx.min(axis=1))
        collisions += sum(v.collision for v in rec.validations)
    vmin = np.maximum(vmin, 0.0)
    return Metrics(dev, tuple(map(float, vmin)), collisions, len(trace.steps))
