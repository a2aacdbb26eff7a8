import math

import numpy as np
import pytest
from shapely.affinity import rotate, translate
from shapely.geometry import box

from decoc.environment import RoadModel
from decoc.errors import MismatchedSampling
from decoc.trajectory import Action, VehicleState, action_to_trajectory
from decoc.validation import (ValidationResult, VehicleParams, boxes_overlap, check_collision,
                              check_on_road, drivability_violations, validate_drivability)


def shapely_rect(x, y, h, length, width):
    r = box(-length / 2, -width / 2, length / 2, width / 2)
    return translate(rotate(r, h, use_radians=True, origin=(0, 0)), x, y)


class TestSeparatingAxis:
    def test_matches_shapely(self, rng):
        agree = 0
        for _ in range(2000):
            a = (*rng.uniform(-3, 3, 2), rng.uniform(-math.pi, math.pi), *rng.uniform(1, 5, 2))
            b = (*rng.uniform(-3, 3, 2), rng.uniform(-math.pi, math.pi), *rng.uniform(1, 5, 2))
            ours = bool(boxes_overlap(*a, *b))
            ref = shapely_rect(*a).intersects(shapely_rect(*b))
            agree += ours == ref
        assert agree == 2000

    def test_touching_counts(self):
        assert boxes_overlap(0, 0, 0, 4, 2, 4, 0, 0, 4, 2)
        assert not boxes_overlap(0, 0, 0, 4, 2, 4.001, 0, 0, 4, 2)


class TestDrivability:
    def test_gentle_lane_change_is_drivable(self):
        tr = action_to_trajectory(VehicleState(vx=10.0), Action(0.0, 3.5))
        assert validate_drivability(tr, VehicleParams()).ok

    def test_sharp_swerve_at_low_speed_fails(self):
        tr = action_to_trajectory(VehicleState(vx=2.0), Action(0.0, 4.0))
        res = validate_drivability(tr, VehicleParams())
        assert not res.valid_action
        assert res.first_violation_time is not None

    def test_hard_braking_fails(self):
        tr = action_to_trajectory(VehicleState(vx=20.0), Action(-20.0, 0.0))
        assert drivability_violations(tr, VehicleParams()).any()


class TestRoadAndCollision:
    def test_on_road(self):
        road = RoadModel()
        p = VehicleParams()
        ok = action_to_trajectory(VehicleState(y=1.75, vx=10.0), Action(0.0, 3.5))
        off = action_to_trajectory(VehicleState(y=1.75, vx=10.0), Action(0.0, -1.5))
        assert check_on_road(ok, road, p)
        assert not check_on_road(off, road, p)

    def test_head_on(self):
        p = VehicleParams()
        a = action_to_trajectory(VehicleState(x=0.0, vx=10.0), Action(0.0, 0.0))
        b = action_to_trajectory(VehicleState(x=22.0, vx=0.0), Action(0.0, 0.0))
        assert check_collision(a, b, p, p)
        c = action_to_trajectory(VehicleState(x=22.0, y=4.0, vx=0.0), Action(0.0, 0.0))
        assert not check_collision(a, c, p, p)

    def test_grid_mismatch(self):
        p = VehicleParams()
        a = action_to_trajectory(VehicleState(vx=1.0), Action(0, 0), dt=0.1)
        b = action_to_trajectory(VehicleState(vx=1.0), Action(0, 0), dt=0.2)
        with pytest.raises(MismatchedSampling):
            check_collision(a, b, p, p)


class TestValidationResult:
    def test_time_iff_violation(self):
        with pytest.raises(ValueError):
            ValidationResult(collision=True)
        with pytest.raises(ValueError):
            ValidationResult(first_violation_time=0.5)

    def test_merge(self):
        a = ValidationResult(valid_action=False, first_violation_time=1.0)
        b = ValidationResult(collision=True, first_violation_time=0.4)
        m = a.merge(b)
        assert (m.valid_state, m.valid_action, m.collision, m.first_violation_time) == (True, False, True, 0.4)

    @pytest.mark.parametrize("field", ["length", "width", "min_turn_radius"])
    def test_params_positive(self, field):
        with pytest.raises(ValueError):
            VehicleParams(**{field: 0.0})
