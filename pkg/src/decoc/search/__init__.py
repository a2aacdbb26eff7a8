"""Continuous-action Decoupled-UCT search."""

from ..config import ENHANCEMENTS, SearchConfig
from .mcts import MCTS, RootRow, SearchResult, best_root_index, search
from .model import DrivingModel, StepOutcome, Transition
from .tree import (GROUPS, ActionStats, AgentStats, GroupStats, SearchNode, action_kernel,
                   assign_action_group, blind_value_propose, blind_values, group_region,
                   progressive_widening_due, select_agent_action, select_joint_action,
                   similarity_update, uct_value)

__all__ = [
    "ENHANCEMENTS", "GROUPS", "MCTS", "ActionStats", "AgentStats", "DrivingModel", "GroupStats",
    "RootRow", "SearchConfig", "SearchNode", "SearchResult", "StepOutcome", "Transition",
    "action_kernel", "assign_action_group", "best_root_index", "blind_value_propose",
    "blind_values", "group_region", "progressive_widening_due", "search", "select_agent_action",
    "select_joint_action", "similarity_update", "uct_value",
]
