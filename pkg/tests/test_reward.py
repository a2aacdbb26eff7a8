import numpy as np
import pytest
from scipy.integrate import simpson

from decoc.environment import RoadModel
from decoc.errors import OffRoad
from decoc.reward import (DesiredState, RewardWeights, action_cost, cooperative_reward,
                          cooperative_rewards, squared_accel_integral, state_reward,
                          validation_reward)
from decoc.trajectory import Action, VehicleState, action_to_trajectory, polyval
from decoc.validation import ValidationResult


class TestStateReward:
    def test_on_target(self):
        assert state_reward(VehicleState(y=1.75, vx=10.0), DesiredState(10.0, 0), RoadModel(),
                            RewardWeights()) == 0.0

    def test_weighted_terms(self):
        w = RewardWeights()
        r = state_reward(VehicleState(y=4.0, vx=7.0), DesiredState(10.0, 0), RoadModel(), w)
        assert r == pytest.approx(-(3.0 + 5.0 * 1 + 0.5 * abs(4.0 - 5.25)))

    def test_off_road(self):
        with pytest.raises(OffRoad):
            state_reward(VehicleState(y=-0.1), DesiredState(1.0, 0), RoadModel(), RewardWeights())


class TestActionCost:
    def test_integral_matches_quadrature(self, rng):
        for _ in range(50):
            c = rng.normal(size=6)
            T = rng.uniform(0.5, 4.0)
            t = np.linspace(0, T, 4001)
            ref = simpson(polyval(c, t, 2) ** 2, x=t)
            assert squared_accel_integral(c, T) == pytest.approx(ref, rel=1e-8)

    def test_keep_costs_nothing(self):
        tr = action_to_trajectory(VehicleState(vx=10.0), Action(0, 0))
        assert action_cost(tr, False, RewardWeights()) == 0.0
        assert action_cost(tr, True, RewardWeights()) == -1.0


class TestPenalties:
    def test_validation_reward_sums(self):
        w = RewardWeights()
        assert validation_reward(ValidationResult(), w) == 0.0
        bad = ValidationResult(False, False, True, 0.0)
        assert validation_reward(bad, w) == -1700.0

    def test_weights_signs(self):
        with pytest.raises(ValueError):
            RewardWeights(w_v=-1.0)
        with pytest.raises(ValueError):
            RewardWeights(r_collision=1.0)


class TestCooperative:
    def test_scalar_and_vector_agree(self, rng):
        r = rng.normal(size=4)
        lam = rng.uniform(0, 1, 4)
        vec = cooperative_rewards(r, lam)
        for i in range(4):
            assert vec[i] == pytest.approx(cooperative_reward(list(r), i, lam[i]))

    def test_egoistic(self):
        assert cooperative_reward([1.0, -5.0], 0, 0.0) == 1.0

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            cooperative_reward([1.0, 2.0], 0, 1.5)
