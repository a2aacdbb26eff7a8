"""Built-in evaluation scenes.

The scene layouts are reconstructions of the two published setups; the
numbers are chosen so that the interaction is forced, not measured.

bottleneck
    Two-lane road with oncoming traffic.  A row of parked cars blocks most of
    agent 0's lane, so agent 0 has to swing into the oncoming lane; both can
    only pass at the same time if agent 1 moves towards its right road edge.
merge-in
    Agent 0's lane is blocked by a parked car ahead.  Agents 1 (behind) and 2
    (ahead) drive in the adjacent lane with a gap too short for agent 0 unless
    they open it.
"""

from __future__ import annotations

from .config import SearchConfig
from .environment import AgentSpec, Obstacle, RoadModel, Scenario, validate_scenario
from .reward import DesiredState, RewardWeights
from .trajectory import VehicleState
from .validation import VehicleParams

# Comfort weighted so that one lane change costs about one step spent outside
# the desired lane; with the library defaults a lane change costs as much as
# six such steps and the planners would rather stay put.
SCENE_WEIGHTS = RewardWeights(w_ax=0.02, w_ay=0.02)

# Blind values rank candidates by distance to explored actions: the similarity
# form steers widening towards the worst explored actions when values are
# negative.  A sharper kernel keeps one-lane-wide corridors from being washed
# out by colliding neighbours, and the final choice ignores actions with too
# few samples to be trusted.
SCENE_SEARCH = SearchConfig(bv_mode="distance", kernel_gamma=2.0, n_min_final=50.0)


def bottleneck() -> Scenario:
    road = RoadModel(lane_count=2, lane_width=3.5, length=150.0)
    parked = tuple(Obstacle(x=x, y=1.4, length=4.5, width=2.2) for x in (55.0, 60.5))
    v = 8.0
    green = AgentSpec(id=0, state=VehicleState(x=10.0, y=1.75, vx=v), desired=DesiredState(v, 0),
                      params=VehicleParams(), lam=0.5)
    # oncoming: global x = 100, y = 5.25 in its own (rotated) frame
    red = AgentSpec(id=1, state=VehicleState(x=-100.0, y=road.width - 5.25, vx=v),
                    desired=DesiredState(v, 0), params=VehicleParams(), lam=0.5, direction=-1)
    return validate_scenario(Scenario("bottleneck", road, parked, (green, red), SCENE_WEIGHTS,
                                      SCENE_SEARCH))


def merge_in() -> Scenario:
    road = RoadModel(lane_count=2, lane_width=3.5, length=200.0)
    parked = (Obstacle(x=60.0, y=1.75, length=4.5, width=2.0),)
    v = 10.0
    green = AgentSpec(id=0, state=VehicleState(x=20.0, y=1.75, vx=v), desired=DesiredState(v, 1),
                      lam=0.5)
    red = AgentSpec(id=1, state=VehicleState(x=16.0, y=5.25, vx=v), desired=DesiredState(v, 1),
                    lam=0.5)
    blue = AgentSpec(id=2, state=VehicleState(x=24.0, y=5.25, vx=v), desired=DesiredState(v, 1),
                     lam=0.5)
    return validate_scenario(Scenario("merge-in", road, parked, (green, red, blue), SCENE_WEIGHTS,
                                      SCENE_SEARCH))


BUILTIN_SCENARIOS = {"bottleneck": bottleneck, "merge-in": merge_in}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; valid choices: {sorted(BUILTIN_SCENARIOS)}") from None
