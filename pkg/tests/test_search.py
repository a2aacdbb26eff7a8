import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decoc import SearchConfig, builtin_scenario
from decoc.environment import RoadModel
from decoc.errors import UnknownAction, UnvisitedAction
from decoc.search import (GROUPS, MCTS, AgentStats, DrivingModel, SearchNode, action_kernel,
                          assign_action_group, best_root_index, blind_values, group_region,
                          progressive_widening_due, search, similarity_update, uct_value)
from decoc.trajectory import Action, VehicleState

from toy_models import ContinuousBandit, MatrixGame, rock_paper_scissors, root_action_oracle


def stats_with(actions, cfg=None):
    st_ = AgentStats()
    for a in actions:
        st_.add(a, 0)
    return st_


class TestUCT:
    def test_formula(self):
        assert uct_value(1.0, 4.0, 10.0, 0.7) == pytest.approx(1.0 + 0.7 * math.sqrt(math.log(11) / 4))

    def test_unvisited(self):
        with pytest.raises(UnvisitedAction):
            uct_value(0.0, 0.0, 5.0, 1.0)


class TestKernel:
    def test_values(self):
        a, b = Action(0.0, 0.0), Action(1.0, 2.0)
        assert action_kernel(a, b, 0.5) == pytest.approx(math.exp(-2.5))
        assert action_kernel(a, b, 0.5, (2.0, 0.5)) == pytest.approx(math.exp(-0.5 * 4.0))
        assert action_kernel(a, a, math.inf) == 1.0
        assert action_kernel(a, b, math.inf) == 0.0


class TestSimilarityUpdate:
    def test_weighted_mean_oracle(self, rng):
        cfg = SearchConfig(kernel_gamma=0.7)
        acts = [Action(float(x), float(y)) for x, y in rng.uniform(-2, 2, (5, 2))]
        node = SearchNode((), 0)
        node.per_agent[0] = stats_with(acts)
        hist = []
        for _ in range(40):
            k = int(rng.integers(5))
            G = float(rng.normal())
            similarity_update(node, 0, acts[k], G, cfg)
            hist.append((k, G))
        st_ = node.per_agent[0]
        for j, a in enumerate(acts):
            w = np.array([action_kernel(a, acts[k], cfg.kernel_gamma) for k, _ in hist])
            g = np.array([G for _, G in hist])
            assert st_.n[j] == pytest.approx(w.sum(), rel=1e-12)
            assert st_.q[j] == pytest.approx((w * g).sum() / w.sum(), rel=1e-9)

    def test_group_stats_follow(self, rng):
        cfg = SearchConfig(kernel_gamma=1.0)
        st_ = AgentStats()
        st_.add(Action(0, 0), 0)
        st_.add(Action(1, 0), 1)
        node = SearchNode((), 0)
        node.per_agent[0] = st_
        similarity_update(node, 0, Action(0, 0), 2.0, cfg)
        gs = {g.group: g for g in st_.group_stats()}
        assert gs["0"].n == pytest.approx(1.0)
        assert gs["+"].n == pytest.approx(math.exp(-1.0))
        assert gs["+"].q == pytest.approx(2.0)

    def test_unknown_action(self):
        node = SearchNode((), 0)
        node.per_agent[0] = stats_with([Action(0, 0)])
        with pytest.raises(UnknownAction):
            similarity_update(node, 0, Action(3, 3), 1.0, SearchConfig())

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.floats(-100, 100)), min_size=1, max_size=60))
    def test_indicator_reduces_to_running_mean(self, seq):
        cfg = SearchConfig(kernel_gamma=math.inf)
        acts = [Action(float(k), 0.0) for k in range(4)]
        node = SearchNode((), 0)
        node.per_agent[0] = stats_with(acts)
        for k, G in seq:
            similarity_update(node, 0, acts[k], G, cfg)
        st_ = node.per_agent[0]
        for k in range(4):
            gs = [G for j, G in seq if j == k]
            assert st_.n[k] == len(gs)
            if gs:
                assert st_.q[k] == pytest.approx(np.mean(gs), abs=1e-9)


def brute_blind_values(explored, uct, cands, center, cfg):
    def dist(a, b):
        sv, sy = cfg.kernel_dims_scale
        d2 = sv * (a[0] - b[0]) ** 2 + sy * (a[1] - b[1]) ** 2
        return math.exp(-cfg.kernel_gamma * d2) if cfg.bv_mode == "literal" else math.sqrt(d2)

    spread = np.std([dist(c, center) for c in cands])
    rho = np.std(uct) / spread if spread > 0 else 0.0
    return [min(u + rho * dist(a, c) for a, u in zip(explored, uct)) for c in cands]


class TestBlindValues:
    @pytest.mark.parametrize("mode", ["literal", "distance"])
    def test_brute_force(self, rng, mode):
        cfg = SearchConfig(bv_mode=mode, kernel_gamma=0.3, kernel_dims_scale=(1.0, 2.0))
        explored = rng.uniform(-3, 3, (6, 2))
        uct = rng.normal(size=6)
        cands = rng.uniform(-3, 3, (20, 2))
        got = blind_values(explored, uct, cands, (0.0, 0.0), cfg)
        np.testing.assert_allclose(got, brute_blind_values(explored, uct, cands, (0.0, 0.0), cfg),
                                   rtol=1e-12)

    def test_distance_mode_prefers_far_from_bad(self):
        cfg = SearchConfig(bv_mode="distance")
        explored = np.array([[0.0, 0.0], [4.0, 0.0]])
        uct = np.array([-1.0, 1.0])
        cands = np.array([[0.5, 0.0], [3.5, 0.0]])
        bv = blind_values(explored, uct, cands, (0.0, 0.0), cfg)
        assert bv[1] > bv[0]


class TestGroups:
    road = RoadModel()

    @pytest.mark.parametrize("y,a,label", [
        (1.75, Action(0.0, 0.0), "0"), (1.75, Action(1.0, 0.0), "+"), (1.75, Action(-1.0, 1.0), "-"),
        (1.75, Action(0.0, 3.5), "L"), (1.75, Action(2.0, 2.0), "L+"), (5.25, Action(-2.0, -3.0), "R-"),
        (5.25, Action(0.4, -2.0), "R"), (5.25, Action(0.6, -2.0), "R+"),
    ])
    def test_assign(self, y, a, label):
        assert assign_action_group(VehicleState(y=y, vx=5.0), a, self.road) == label

    def test_region_maps_back(self, rng):
        s = VehicleState(y=1.75, vx=5.0)
        box = (-5.0, 5.0, -1.0, 4.0)
        for g in GROUPS:
            region = group_region(s, g, self.road, box, 0.5)
            if region is None:
                assert g.startswith("R")
                continue
            for _ in range(20):
                a = Action(rng.uniform(region[0], region[1]), rng.uniform(region[2], region[3]))
                if a.dy == region[3] or a.dv in (region[0], region[1]):
                    continue
                assert assign_action_group(s, a, self.road) == g


class TestWidening:
    def test_due(self):
        node = SearchNode((0,), 0)
        node.per_agent[0] = stats_with([Action(0, 0)])
        cfg = SearchConfig(pw_c=1.0, pw_alpha=0.5)
        node.n = 1.0
        assert not progressive_widening_due(node, 0, cfg)
        node.n = 4.0
        assert progressive_widening_due(node, 0, cfg)

    @pytest.mark.parametrize("enh", ["basic", "groups+guided+similarity"])
    def test_bound_holds(self, enh):
        cfg = SearchConfig(iterations=2000, max_depth=3, pw_c=1.5, pw_alpha=0.4).with_enhancements(enh)
        m = MCTS(ContinuousBandit(2), cfg, np.random.default_rng(0))
        m.root = m.new_node((0, 0), 0)
        for _ in range(cfg.iterations):
            for node in m.run_iteration():
                for st_ in node.per_agent.values():
                    assert len(st_) <= 1 + math.ceil(cfg.pw_c * node.n ** cfg.pw_alpha) + 1


class TestMCTS:
    def test_bandit_finds_target(self):
        cfg = SearchConfig(iterations=3000, max_depth=1, reward_scale=1.0, bv_mode="distance")
        res = MCTS(ContinuousBandit(1, target=(1.0, -1.0)), cfg, np.random.default_rng(3)).search((0,))
        a = res.best[0]
        assert math.hypot(a.dv - 1.0, a.dy + 1.0) < 1.0

    def test_matrix_game_matches_oracle(self):
        game = MatrixGame([rock_paper_scissors(), rock_paper_scissors()])
        cfg = SearchConfig(iterations=5000, max_depth=2, pw_c=0.0, reward_scale=1.0,
                           initial_actions_per_agent=3).with_enhancements("basic")
        res = MCTS(game, cfg, np.random.default_rng(0)).search((0, 0))
        for i in (0, 1):
            oracle = root_action_oracle(res.root, i, cfg.discount)
            for row in res.rows_for(i):
                assert row.q == pytest.approx(oracle[Action(row.dv, row.dy)], abs=0.05)

    def test_node_counts(self):
        cfg = SearchConfig(iterations=300, max_depth=3)
        m = MCTS(ContinuousBandit(2), cfg, np.random.default_rng(0))
        res = m.search((0, 0))
        assert res.root.n == 300
        for node in res.root.iter_nodes():
            if node.children:
                assert node.n >= sum(e.child.n for e in node.children.values())

    def test_best_root_index_ties(self):
        st_ = stats_with([Action(0, 0), Action(1, 0), Action(2, 0)])
        st_.q[:3] = [1.0, 1.0, 0.5]
        st_.n[:3] = [2.0, 5.0, 9.0]
        assert best_root_index(st_, SearchConfig(), np.random.default_rng(0)) == 1
        assert best_root_index(st_, SearchConfig(n_min_final=6.0), np.random.default_rng(0)) == 2

    def test_seeded(self, bottleneck):
        cfg = replace(bottleneck.search, iterations=50)
        a = search(bottleneck.initial_state, cfg, bottleneck, rng=np.random.default_rng(5))
        b = search(bottleneck.initial_state, cfg, bottleneck, rng=np.random.default_rng(5))
        assert a.rows == b.rows and a.best == b.best
        assert sum(r.selected for r in a.rows) == 2

    def test_constant_velocity_needs_ego(self, bottleneck):
        with pytest.raises(ValueError):
            search(bottleneck.initial_state, bottleneck.search, bottleneck, prediction="constant-velocity")
        res = search(bottleneck.initial_state, replace(bottleneck.search, iterations=30), bottleneck,
                     ego=0, prediction="constant-velocity", rng=np.random.default_rng(0))
        assert set(res.best) == {0}


class TestDrivingModel:
    def test_action_box_keeps_on_road(self, bottleneck):
        m = DrivingModel(bottleneck)
        s = VehicleState(y=1.75, vx=3.0)
        box = m.action_box((s, s), 0)
        assert box[0] == -3.0
        assert box[2] == pytest.approx(-0.75) and box[3] == 4.0

    def test_seeds_inside_box(self, bottleneck):
        m = DrivingModel(bottleneck)
        seeds = m.initial_actions(bottleneck.initial_state, 0)
        assert Action(0.0, 0.0) in seeds and Action(0.0, -3.5) not in seeds

    def test_rollout_avoids_obstacles(self, bottleneck):
        m = DrivingModel(bottleneck)
        s = VehicleState(x=30.0, y=1.75, vx=8.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, tr = m.rollout_action(s, 0, rng)
            assert m.admissible(0, tr)
