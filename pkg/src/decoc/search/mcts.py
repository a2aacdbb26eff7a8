"""Decoupled-UCT Monte Carlo Tree Search over continuous joint actions."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import SearchConfig
from ..environment import CONSTANT_VELOCITY, Scenario
from ..trajectory import Action
from .model import DrivingModel
from .tree import GROUPS, AgentStats, Edge, SearchNode, select_joint_action, update_stats

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class RootRow:
    agent: int
    dv: float
    dy: float
    n: float
    q: float
    group: str
    selected: bool
    seeded: bool


@dataclass(frozen=True)
class SearchResult:
    best: dict[int, Action]
    rows: tuple[RootRow, ...]
    root: SearchNode

    def rows_for(self, agent: int) -> list[RootRow]:
        return [r for r in self.rows if r.agent == agent]


def best_root_index(st: AgentStats, cfg: SearchConfig, rng: np.random.Generator) -> int:
    """Action with the highest value among those visited at least ``n_min_final`` times.

    Ties go to the more visited action, then uniformly at random.
    """
    s = st.size
    n = st.n[:s]
    q = st.q[:s]
    eligible = np.flatnonzero(n >= cfg.n_min_final)
    if eligible.size == 0:
        eligible = np.flatnonzero(n > 0)
        if eligible.size == 0:
            return 0
    qe = q[eligible]
    top = eligible[qe == qe.max()]
    if top.size > 1:
        ne = n[top]
        top = top[ne == ne.max()]
    if top.size > 1:
        return int(top[rng.integers(top.size)])
    return int(top[0])


class MCTS:
    """One search tree owned by one planner.

    ``model`` supplies the world: action boxes, seeds, groups, transitions and
    a rollout policy.  See :class:`~decoc.search.model.DrivingModel`.
    """

    def __init__(self, model, cfg: SearchConfig, rng: np.random.Generator | None = None):
        self.model = model
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        self.root: SearchNode | None = None

    def new_node(self, joint_state, depth: int, terminal: bool = False) -> SearchNode:
        node = SearchNode(joint_state, depth, terminal)
        if terminal or depth >= self.cfg.max_depth:
            return node
        model = self.model
        for i in model.searched:
            st = AgentStats()
            seeds = model.initial_actions(joint_state, i)[: self.cfg.initial_actions_per_agent]
            for a in seeds:
                st.add(a, model.group_of(joint_state, i, a))
            node.per_agent[i] = st
        return node

    def rollout(self, joint_state, depth_remaining: int) -> np.ndarray:
        """Discounted cooperative return of a default-policy simulation."""
        G = np.zeros(self.model.n_agents)
        disc = 1.0
        state = joint_state
        for _ in range(depth_remaining):
            tr = self.model.rollout_step(state, self.rng)
            G += disc * tr.rewards
            if tr.terminal:
                break
            disc *= self.cfg.discount
            state = tr.next_state
        return G

    def run_iteration(self) -> list[SearchNode]:
        """Select, expand, simulate, backpropagate.  Returns the visited nodes."""
        cfg = self.cfg
        node = self.root
        path: list[tuple[SearchNode, dict, np.ndarray]] = []
        while True:
            if node.terminal or node.depth >= cfg.max_depth:
                leaf = np.zeros(self.model.n_agents)
                break
            joint, chosen = select_joint_action(node, cfg, self.rng, self.model)
            edge = node.children.get(joint)
            if edge is None:
                tr = self.model.transition(node.joint_state, joint)
                child = self.new_node(tr.next_state, node.depth + 1, tr.terminal)
                edge = Edge(child, tr.rewards)
                node.children[joint] = edge
                path.append((node, chosen, edge.rewards))
                node = child
                if child.terminal or child.depth >= cfg.max_depth:
                    leaf = np.zeros(self.model.n_agents)
                else:
                    leaf = self.rollout(child.joint_state, cfg.max_depth - child.depth)
                break
            path.append((node, chosen, edge.rewards))
            node = edge.child
        node.n += 1.0
        visited = [node]
        G = leaf
        for parent, chosen, rewards in reversed(path):
            G = rewards + cfg.discount * G
            for i, k in chosen.items():
                update_stats(parent.per_agent[i], k, float(G[i]), cfg)
            parent.n += 1.0
            visited.append(parent)
        visited.reverse()
        return visited

    def search(self, joint_state) -> SearchResult:
        self.root = self.new_node(joint_state, 0)
        for _ in range(self.cfg.iterations):
            self.run_iteration()
        return self.result()

    def result(self) -> SearchResult:
        root = self.root
        best = {}
        rows = []
        for i, st in root.per_agent.items():
            k = best_root_index(st, self.cfg, self.rng)
            best[i] = st.actions[k]
            n_seeds = min(self.cfg.initial_actions_per_agent,
                          len(self.model.initial_actions(root.joint_state, i)))
            for j, a in enumerate(st.actions):
                rows.append(RootRow(i, a.dv, a.dy, float(st.n[j]), float(st.q[j]),
                                    GROUPS[int(st.grp[j])], j == k, j < n_seeds))
        log.debug("search done: root n=%s, best=%s", root.n, best)
        return SearchResult(best, tuple(rows), root)


def search(joint_state, cfg: SearchConfig, scenario: Scenario, ego: int | None = None,
           prediction: str | None = None, rng: np.random.Generator | None = None) -> SearchResult:
    """Plan from ``joint_state``.

    With ``prediction="constant-velocity"`` only ``ego`` is searched over and
    every other agent keeps its velocity; otherwise all agents are searched.
    """
    if prediction == CONSTANT_VELOCITY:
        if ego is None:
            raise ValueError("constant-velocity prediction needs an ego agent")
        searched = (ego,)
    else:
        searched = None
    model = DrivingModel(scenario, cfg, searched)
    return MCTS(model, cfg, rng).search(joint_state)
