"""Decentralized cooperative trajectory planning with continuous-action MCTS."""

from .config import SearchConfig
from .environment import AgentSpec, Obstacle, RoadModel, Scenario, lane_index, load_scenario, step
from .reward import DesiredState, RewardWeights
from .scenarios import builtin_scenario
from .trajectory import Action, Trajectory, VehicleState, action_to_trajectory, solve_quintic
from .validation import ValidationResult, VehicleParams

__version__ = "0.1.0"
