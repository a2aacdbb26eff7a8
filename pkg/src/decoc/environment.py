"""Road model, scenarios and the deterministic world step.

Every agent plans in its own road frame: ``x`` along its direction of travel,
``y`` to its left, lane 0 being its rightmost lane.  Agents driving in the
negative global x direction use the road rotated by 180 degrees, so their
frame keeps ``vx >= 0``.  Obstacles and collision checks live in the global
frame.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import SearchConfig
from .errors import MismatchedSampling, OffRoad, ParseError, ScenarioValidationError
from .reward import DesiredState, RewardWeights
from .trajectory import Trajectory, VehicleState
from .validation import (ValidationResult, VehicleParams, boxes_overlap, drivability_violations,
                         footprint_y_extent, off_road_mask, overlap_mask, same_grid)

CONSTANT_VELOCITY = "constant-velocity"
COOPERATIVE = "cooperative"
PREDICTION_MODES = (CONSTANT_VELOCITY, COOPERATIVE)


@dataclass(frozen=True, slots=True)
class RoadModel:
    """Straight road; lane 0 is centred at ``y = lane_width / 2``."""

    lane_count: int = 2
    lane_width: float = 3.5
    length: float = 150.0

    def __post_init__(self):
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if not self.lane_width > 0:
            raise ValueError("lane_width must be > 0")

    @property
    def width(self) -> float:
        return self.lane_count * self.lane_width

    def contains(self, y: float) -> bool:
        return 0.0 <= y <= self.width

    def lane_center(self, k: int) -> float:
        return (k + 0.5) * self.lane_width

    def lane_index(self, y: float) -> int:
        return lane_index(y, self)

    def raw_lane(self, y: float) -> int:
        """Lane number without bounds checks (negative or >= lane_count off road)."""
        return math.floor(y / self.lane_width)


def lane_index(y: float, road: RoadModel) -> int:
    """Index of the lane containing ``y``; lane boundaries belong to the upper lane."""
    if not road.contains(y):
        raise OffRoad(f"y={y} outside road [0, {road.width}]")
    return min(math.floor(y / road.lane_width), road.lane_count - 1)


def clamped_lane_index(y: float, road: RoadModel) -> int:
    return min(max(math.floor(y / road.lane_width), 0), road.lane_count - 1)


@dataclass(frozen=True, slots=True)
class Obstacle:
    x: float
    y: float
    length: float = 4.5
    width: float = 2.0
    heading: float = 0.0

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True)
class AgentSpec:
    id: int
    state: VehicleState
    desired: DesiredState
    params: VehicleParams = field(default_factory=VehicleParams)
    lam: float = 0.5
    prediction_mode: str = COOPERATIVE
    # +1 drives towards global +x, -1 towards global -x
    direction: int = 1

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"agent {self.id}: cooperation factor must lie in [0, 1]")
        if self.prediction_mode not in PREDICTION_MODES:
            raise ValueError(f"agent {self.id}: unknown prediction mode {self.prediction_mode!r}")
        if self.direction not in (1, -1):
            raise ValueError(f"agent {self.id}: direction must be +1 or -1")
        if self.state.vx < 0:
            raise ValueError(f"agent {self.id}: vx must be >= 0")


@dataclass(frozen=True)
class Scenario:
    name: str
    road: RoadModel
    obstacles: tuple[Obstacle, ...]
    agents: tuple[AgentSpec, ...]
    weights: RewardWeights = field(default_factory=RewardWeights)
    search: SearchConfig = field(default_factory=SearchConfig)

    @property
    def initial_state(self) -> tuple[VehicleState, ...]:
        return tuple(a.state for a in self.agents)

    def agent_index(self, agent_id: int) -> int:
        for i, a in enumerate(self.agents):
            if a.id == agent_id:
                return i
        raise KeyError(agent_id)


# -- frames ---------------------------------------------------------------

def global_pose(x, y, heading, direction: int, road: RoadModel):
    """Map agent-frame coordinates to the global frame."""
    if direction == 1:
        return x, y, heading
    return -x, road.width - y, heading + math.pi


def global_state_pose(s: VehicleState, direction: int, road: RoadModel) -> tuple[float, float, float]:
    return global_pose(s.x, s.y, s.heading, direction, road)


# -- world step -----------------------------------------------------------

def step(joint_state: Sequence[VehicleState], trajectories: Sequence[Trajectory],
         road: RoadModel, obstacles: Sequence[Obstacle],
         agents: Sequence[AgentSpec]) -> tuple[tuple[VehicleState, ...], list[ValidationResult]]:
    """Advance every agent to the end of its trajectory and validate the joint motion."""
    n = len(agents)
    if len(joint_state) != n or len(trajectories) != n:
        raise ValueError("joint state, trajectories and agents must have equal length")
    ref = trajectories[0]
    for tr in trajectories[1:]:
        if not same_grid(ref, tr):
            raise MismatchedSampling("all trajectories must share one time grid")
    t = ref.t

    poses = []
    bad_action = []
    bad_state = []
    for spec, tr in zip(agents, trajectories):
        poses.append(global_pose(tr.x, tr.y, tr.heading, spec.direction, road))
        bad_action.append(drivability_violations(tr, spec.params))
        bad_state.append(off_road_mask(tr, road, spec.params))

    hit = [np.zeros(len(t), dtype=bool) for _ in range(n)]
    for i in range(n):
        xi, yi, hi = poses[i]
        pi = agents[i].params
        for j in range(i + 1, n):
            xj, yj, hj = poses[j]
            m = overlap_mask(xi, yi, hi, pi, xj, yj, hj, agents[j].params)
            if m.any():
                hit[i] |= m
                hit[j] |= m
        for ob in obstacles:
            m = overlap_mask(xi, yi, hi, pi, ob.x, ob.y, ob.heading, ob)
            if m.any():
                hit[i] |= m

    results = []
    for i in range(n):
        any_bad = bad_action[i] | bad_state[i] | hit[i]
        idx = np.flatnonzero(any_bad)
        results.append(ValidationResult(
            valid_state=not bad_state[i].any(),
            valid_action=not bad_action[i].any(),
            collision=bool(hit[i].any()),
            first_violation_time=float(t[idx[0]]) if idx.size else None,
        ))
    next_state = tuple(tr.terminal_state for tr in trajectories)
    return next_state, results


def initial_conflicts(scenario: Scenario) -> list[str]:
    """Invariant violations of a scenario's initial configuration."""
    road = scenario.road
    problems = []
    ids = [a.id for a in scenario.agents]
    if len(set(ids)) != len(ids):
        problems.append("agent ids must be unique")
    for ob in scenario.obstacles:
        e = float(footprint_y_extent(ob.heading, VehicleParams(length=ob.length, width=ob.width)))
        if ob.y - e < -1e-9 or ob.y + e > road.width + 1e-9:
            problems.append(f"obstacle at ({ob.x}, {ob.y}) leaves the road")
    poses = []
    for a in scenario.agents:
        s = a.state
        e = float(footprint_y_extent(s.heading, a.params))
        if s.y - e < -1e-9 or s.y + e > road.width + 1e-9:
            problems.append(f"agent {a.id} starts off road")
        if not 0 <= a.desired.k_des < road.lane_count:
            problems.append(f"agent {a.id}: k_des={a.desired.k_des} is not a lane of the road")
        poses.append(global_state_pose(s, a.direction, road))
    for i, a in enumerate(scenario.agents):
        xa, ya, ha = poses[i]
        for j in range(i + 1, len(scenario.agents)):
            b = scenario.agents[j]
            xb, yb, hb = poses[j]
            if boxes_overlap(xa, ya, ha, a.params.length, a.params.width,
                             xb, yb, hb, b.params.length, b.params.width):
                problems.append(f"agents {a.id} and {b.id} collide initially")
        for ob in scenario.obstacles:
            if boxes_overlap(xa, ya, ha, a.params.length, a.params.width,
                             ob.x, ob.y, ob.heading, ob.length, ob.width):
                problems.append(f"agent {a.id} collides with an obstacle initially")
    return problems


def validate_scenario(scenario: Scenario) -> Scenario:
    problems = initial_conflicts(scenario)
    if problems:
        raise ScenarioValidationError("; ".join(problems))
    return scenario


# -- serialisation --------------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    agents = []
    for a in sc.agents:
        agents.append({
            "id": a.id,
            "state": asdict(a.state),
            "params": asdict(a.params),
            "desired": asdict(a.desired),
            "lambda": a.lam,
            "prediction_mode": a.prediction_mode,
            "direction": a.direction,
        })
    return {
        "name": sc.name,
        "road": asdict(sc.road),
        "obstacles": [asdict(o) for o in sc.obstacles],
        "agents": agents,
        "weights": asdict(sc.weights),
        "search": sc.search.to_dict(),
    }


def _take(data, key, where, default=...):
    if not isinstance(data, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in data:
        if default is ...:
            raise ParseError(f"missing field '{where}.{key}'" if where else f"missing field '{key}'")
        return default
    return data[key]


def _build(cls, data, where, required=()):
    if not isinstance(data, dict):
        raise ParseError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
    for r in required:
        _take(data, r, where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(f"{where}: {exc}") from None


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ParseError("scenario: expected a JSON object at top level")
    road = _build(RoadModel, _take(data, "road", ""), "road",
                  required=("lane_count", "lane_width", "length"))
    obstacles = tuple(_build(Obstacle, o, f"obstacles[{i}]", required=("x", "y"))
                      for i, o in enumerate(_take(data, "obstacles", "", [])))
    agents = []
    for i, a in enumerate(_take(data, "agents", "")):
        where = f"agents[{i}]"
        state = _build(VehicleState, _take(a, "state", where), f"{where}.state",
                       required=("x", "y", "vx"))
        desired = _build(DesiredState, _take(a, "desired", where), f"{where}.desired",
                         required=("v_des", "k_des"))
        params = _build(VehicleParams, _take(a, "params", where, {}), f"{where}.params")
        known = {"id", "state", "desired", "params", "lambda", "prediction_mode", "direction"}
        unknown = set(a) - known
        if unknown:
            raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
        try:
            agents.append(AgentSpec(id=_take(a, "id", where), state=state, desired=desired,
                                    params=params, lam=_take(a, "lambda", where, 0.5),
                                    prediction_mode=_take(a, "prediction_mode", where, COOPERATIVE),
                                    direction=_take(a, "direction", where, 1)))
        except ValueError as exc:
            raise ScenarioValidationError(f"{where}: {exc}") from None
    if not agents:
        raise ScenarioValidationError("scenario needs at least one agent")
    weights = _build(RewardWeights, _take(data, "weights", "", {}), "weights")
    try:
        search = SearchConfig.from_dict(_take(data, "search", "", {}))
    except KeyError as exc:
        raise ParseError(f"search: {exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(f"search: {exc}") from None
    sc = Scenario(name=_take(data, "name", "", "custom"), road=road, obstacles=obstacles,
                  agents=tuple(agents), weights=weights, search=search)
    return validate_scenario(sc)


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(sc) + "\n")


def scenario_hash(sc: Scenario) -> str:
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_scenario(path) -> Scenario:
    """Load a scenario from a JSON file, or build a named built-in one."""
    from .scenarios import BUILTIN_SCENARIOS, builtin_scenario

    if str(path) in BUILTIN_SCENARIOS:
        return builtin_scenario(str(path))
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"{p}: cannot read scenario file ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(data)
    except ParseError as exc:
        raise ParseError(f"{p}: {exc}") from None
