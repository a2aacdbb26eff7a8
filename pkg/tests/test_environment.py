import json
import math

import pytest

from decoc import builtin_scenario, load_scenario
from decoc.environment import (RoadModel, clamped_lane_index, dumps_scenario, global_pose,
                               initial_conflicts, lane_index, save_scenario, scenario_from_dict,
                               scenario_hash, scenario_to_dict, step)
from decoc.errors import OffRoad, ParseError, ScenarioValidationError
from decoc.trajectory import Action, action_to_trajectory


class TestRoad:
    def test_lane_index(self):
        road = RoadModel()
        assert lane_index(0.0, road) == 0
        assert lane_index(3.5, road) == 1
        assert lane_index(7.0, road) == 1
        with pytest.raises(OffRoad):
            lane_index(7.01, road)
        assert clamped_lane_index(-1.0, road) == 0

    def test_global_pose_flips(self):
        road = RoadModel()
        x, y, h = global_pose(-100.0, 1.75, 0.0, -1, road)
        assert (x, y) == (100.0, 5.25)
        assert h == pytest.approx(math.pi)


class TestScenarios:
    @pytest.mark.parametrize("name", ["bottleneck", "merge-in"])
    def test_builtin_valid(self, name):
        sc = builtin_scenario(name)
        assert initial_conflicts(sc) == []

    def test_unknown_builtin(self):
        with pytest.raises(KeyError):
            builtin_scenario("roundabout")

    def test_roundtrip(self, bottleneck, tmp_path):
        p = tmp_path / "b.json"
        save_scenario(bottleneck, p)
        back = load_scenario(p)
        assert scenario_to_dict(back) == scenario_to_dict(bottleneck)
        assert scenario_hash(back) == scenario_hash(bottleneck)

    def test_parse_errors(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            load_scenario(p)
        with pytest.raises(ParseError):
            load_scenario(tmp_path / "missing.json")

    def test_missing_field(self, bottleneck):
        d = scenario_to_dict(bottleneck)
        del d["agents"][0]["state"]["vx"]
        with pytest.raises(ParseError, match="vx"):
            scenario_from_dict(d)

    def test_unknown_search_field(self, bottleneck):
        d = scenario_to_dict(bottleneck)
        d["search"]["bogus"] = 1
        with pytest.raises(ParseError):
            scenario_from_dict(d)

    def test_initial_overlap_rejected(self, bottleneck):
        d = json.loads(dumps_scenario(bottleneck))
        d["agents"][0]["state"]["x"] = 57.0
        with pytest.raises(ScenarioValidationError):
            scenario_from_dict(d)


class TestStep:
    def test_obstacle_collision_flags_only_the_driver(self, bottleneck):
        states = bottleneck.initial_state
        s0 = states[0].__class__(x=48.0, y=1.75, vx=8.0)
        trajs = [action_to_trajectory(s0, Action(0, 0)), action_to_trajectory(states[1], Action(0, 0))]
        nxt, res = step((s0, states[1]), trajs, bottleneck.road, bottleneck.obstacles, bottleneck.agents)
        assert res[0].collision and not res[1].collision
        assert nxt[0].x == pytest.approx(64.0)

    def test_clear_step(self, bottleneck):
        states = bottleneck.initial_state
        trajs = [action_to_trajectory(s, Action(0, 0)) for s in states]
        _, res = step(states, trajs, bottleneck.road, bottleneck.obstacles, bottleneck.agents)
        assert all(r.ok for r in res)
