"""Decoupled tree statistics, semantic groups, progressive widening and blind values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import SearchConfig
from ..errors import UnknownAction, UnvisitedAction
from ..trajectory import Action, VehicleState

GROUPS = ("0", "+", "-", "L", "L+", "L-", "R", "R+", "R-")
GROUP_INDEX = {g: i for i, g in enumerate(GROUPS)}
N_GROUPS = len(GROUPS)

_LAT = {0: "", 1: "L", -1: "R"}
_LON = {0: "", 1: "+", -1: "-"}


def _lateral_class(y: float, dy: float, lane_width: float) -> int:
    before = math.floor(y / lane_width)
    after = math.floor((y + dy) / lane_width)
    return (after > before) - (after < before)


def _longitudinal_class(dv: float, eps_dv: float) -> int:
    if dv > eps_dv:
        return 1
    if dv < -eps_dv:
        return -1
    return 0


def group_label(lateral: int, longitudinal: int) -> str:
    return (_LAT[lateral] + _LON[longitudinal]) or "0"


def assign_action_group(s: VehicleState, a: Action, road, eps_dv: float = 0.5) -> str:
    """Semantic group of ``a`` judged by the lane and speed of the successor state."""
    return group_label(_lateral_class(s.y, a.dy, road.lane_width), _longitudinal_class(a.dv, eps_dv))


def group_index(s: VehicleState, a: Action, road, eps_dv: float) -> int:
    return GROUP_INDEX[assign_action_group(s, a, road, eps_dv)]


def group_region(s: VehicleState, group: str, road, box, eps_dv: float):
    """Sub-box ``(dv_lo, dv_hi, dy_lo, dy_hi)`` of ``box`` mapping to ``group``, or None."""
    dv_lo, dv_hi, dy_lo, dy_hi = box
    lat = 1 if group.startswith("L") else -1 if group.startswith("R") else 0
    lon = 1 if group.endswith("+") else -1 if group.endswith("-") else 0
    k = math.floor(s.y / road.lane_width)
    lane_lo = k * road.lane_width - s.y
    lane_hi = (k + 1) * road.lane_width - s.y
    if lat == 0:
        ylo, yhi = max(dy_lo, lane_lo), min(dy_hi, lane_hi)
    elif lat == 1:
        ylo, yhi = max(dy_lo, lane_hi), dy_hi
    else:
        ylo, yhi = dy_lo, min(dy_hi, lane_lo)
    if lon == 0:
        vlo, vhi = max(dv_lo, -eps_dv), min(dv_hi, eps_dv)
    elif lon == 1:
        vlo, vhi = max(dv_lo, eps_dv), dv_hi
    else:
        vlo, vhi = dv_lo, min(dv_hi, -eps_dv)
    if ylo >= yhi or vlo > vhi:
        return None
    return (vlo, vhi, ylo, yhi)


def uct_value(q: float, n: float, parent_n: float, c: float) -> float:
    """``q + c * sqrt(ln(parent_n + 1) / n)``."""
    if n <= 0:
        raise UnvisitedAction("UCT is undefined for an unvisited entry")
    return q + c * math.sqrt(math.log(parent_n + 1.0) / n)


def _uct(q, n, parent_n, c, scale):
    return q / scale + c * np.sqrt(math.log(parent_n + 1.0) / n)


def action_kernel(a: Action, b: Action, gamma: float, dims_scale=(1.0, 1.0)) -> float:
    """Radial basis similarity ``exp(-gamma * ||a - b||^2)`` with per-axis scaling."""
    d2 = dims_scale[0] * (a.dv - b.dv) ** 2 + dims_scale[1] * (a.dy - b.dy) ** 2
    if math.isinf(gamma):
        return 1.0 if d2 == 0.0 else 0.0
    return math.exp(-gamma * d2)


def _argmax(values: np.ndarray, rng: np.random.Generator) -> int:
    k = int(values.argmax())
    ties = values == values[k]
    if ties.sum() == 1:
        return k
    ties = ties.nonzero()[0]
    return int(ties[rng.integers(len(ties))])


@dataclass(frozen=True, slots=True)
class ActionStats:
    action: Action
    q: float
    n: float


@dataclass(frozen=True, slots=True)
class GroupStats:
    group: str
    q: float
    n: float
    members: tuple[ActionStats, ...]


class AgentStats:
    """One agent's decoupled statistics at one node (its explored set ``A_exp``)."""

    __slots__ = ("acts", "q", "n", "grp", "size", "actions", "lookup", "group_n", "group_q",
                 "group_count")

    def __init__(self, capacity: int = 8):
        self.acts = np.empty((capacity, 2))
        self.q = np.zeros(capacity)
        self.n = np.zeros(capacity)
        self.grp = np.zeros(capacity, dtype=np.intp)
        self.size = 0
        self.actions: list[Action] = []
        self.lookup: dict[Action, int] = {}
        self.group_n = np.zeros(N_GROUPS)
        self.group_q = np.zeros(N_GROUPS)
        self.group_count = np.zeros(N_GROUPS, dtype=np.intp)

    def __len__(self) -> int:
        return self.size

    def add(self, action: Action, group: int) -> int:
        idx = self.lookup.get(action)
        if idx is not None:
            return idx
        if self.size == len(self.q):
            cap = 2 * len(self.q)
            self.acts = np.resize(self.acts, (cap, 2))
            self.q = np.concatenate((self.q, np.zeros(cap - len(self.q))))
            self.n = np.concatenate((self.n, np.zeros(cap - len(self.n))))
            self.grp = np.concatenate((self.grp, np.zeros(cap - len(self.grp), dtype=np.intp)))
        idx = self.size
        self.acts[idx] = (action.dv, action.dy)
        self.q[idx] = 0.0
        self.n[idx] = 0.0
        self.grp[idx] = group
        self.size += 1
        self.actions.append(action)
        self.lookup[action] = idx
        self.group_count[group] += 1
        return idx

    def index(self, action: Action) -> int:
        try:
            return self.lookup[action]
        except KeyError:
            raise UnknownAction(f"{action} is not an explored action") from None

    def refresh_groups(self) -> None:
        s = self.size
        n = self.n[:s]
        g = self.grp[:s]
        self.group_n = np.bincount(g, weights=n, minlength=N_GROUPS)
        wq = np.bincount(g, weights=n * self.q[:s], minlength=N_GROUPS)
        self.group_q = np.divide(wq, self.group_n, out=np.zeros(N_GROUPS), where=self.group_n > 0)

    def action_stats(self) -> list[ActionStats]:
        return [ActionStats(a, float(self.q[i]), float(self.n[i])) for i, a in enumerate(self.actions)]

    def group_stats(self) -> list[GroupStats]:
        members: dict[int, list[ActionStats]] = {}
        for i, st in enumerate(self.action_stats()):
            members.setdefault(int(self.grp[i]), []).append(st)
        return [GroupStats(GROUPS[g], float(self.group_q[g]), float(self.group_n[g]), tuple(m))
                for g, m in sorted(members.items())]


@dataclass(slots=True)
class Edge:
    child: "SearchNode"
    rewards: np.ndarray


class SearchNode:
    """Tree node; ``per_agent`` maps searched agent index to its statistics."""

    __slots__ = ("joint_state", "depth", "n", "per_agent", "children", "terminal")

    def __init__(self, joint_state: Sequence[VehicleState], depth: int, terminal: bool = False):
        self.joint_state = tuple(joint_state)
        self.depth = depth
        self.n = 0.0
        self.per_agent: dict[int, AgentStats] = {}
        self.children: dict[tuple[Action, ...], Edge] = {}
        self.terminal = terminal

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(e.child for e in node.children.values())


def progressive_widening_due(node: SearchNode, agent: int, cfg: SearchConfig) -> bool:
    """True when the agent's explored set is smaller than ``C_PW * n(s)^alpha``."""
    return len(node.per_agent[agent]) < cfg.pw_c * node.n ** cfg.pw_alpha


def update_stats(st: AgentStats, idx: int, G: float, cfg: SearchConfig) -> None:
    if cfg.kernel_is_indicator:
        n = st.n[idx] + 1.0
        st.n[idx] = n
        st.q[idx] += (G - st.q[idx]) / n
        g = st.grp[idx]
        gn = st.group_n[g] + 1.0
        st.group_q[g] += (G - st.group_q[g]) / gn
        st.group_n[g] = gn
        return
    s = st.size
    d = st.acts[:s] - st.acts[idx]
    sv, sy = cfg.kernel_dims_scale
    w = np.exp(-cfg.kernel_gamma * (sv * d[:, 0] ** 2 + sy * d[:, 1] ** 2))
    n = st.n[:s]
    n += w
    touched = w > 0
    q = st.q[:s]
    q[touched] += w[touched] * (G - q[touched]) / n[touched]
    st.refresh_groups()


def similarity_update(node: SearchNode, agent: int, taken: Action, G: float, cfg: SearchConfig) -> None:
    """Share return ``G`` of ``taken`` with every explored action, weighted by the kernel.

    Visit counts become real valued.  The node's own visit count is advanced
    by the caller, once per iteration.
    """
    try:
        st = node.per_agent[agent]
    except KeyError:
        raise UnknownAction(f"agent {agent} has no statistics at this node") from None
    update_stats(st, st.index(taken), G, cfg)


def uniform_action(box, rng: np.random.Generator) -> Action:
    dv_lo, dv_hi, dy_lo, dy_hi = box
    u = rng.random(2)
    return Action(float(dv_lo + u[0] * (dv_hi - dv_lo)), float(dy_lo + u[1] * (dy_hi - dy_lo)))


def _uniform_block(box, m: int, rng: np.random.Generator) -> np.ndarray:
    dv_lo, dv_hi, dy_lo, dy_hi = box
    u = rng.random((m, 2))
    u[:, 0] = dv_lo + u[:, 0] * (dv_hi - dv_lo)
    u[:, 1] = dy_lo + u[:, 1] * (dy_hi - dy_lo)
    return u


def blind_values(explored: np.ndarray, uct: np.ndarray, candidates: np.ndarray, center,
                 cfg: SearchConfig) -> np.ndarray:
    """Blind value of each candidate given explored actions and their UCT values."""
    sv, sy = cfg.kernel_dims_scale
    d = explored[:, None, :] - candidates[None, :, :]
    d2 = sv * d[..., 0] ** 2 + sy * d[..., 1] ** 2
    c = candidates - np.asarray(center)
    c2 = sv * c[:, 0] ** 2 + sy * c[:, 1] ** 2
    if cfg.bv_mode == "literal":
        sim = np.exp(-cfg.kernel_gamma * d2)
        spread = np.exp(-cfg.kernel_gamma * c2).std()
    else:
        sim = np.sqrt(d2)
        spread = np.sqrt(c2).std()
    sigma_u = uct.std()
    rho = sigma_u / spread if spread > 0 else 0.0
    return (uct[:, None] + rho * sim).min(axis=0)


def blind_value_propose(st: AgentStats, parent_n: float, cfg: SearchConfig, rng: np.random.Generator,
                        box, center=None) -> Action:
    """Pick the most attractive of ``cfg.bv_candidates`` uniform draws from ``box``."""
    cand = _uniform_block(box, cfg.bv_candidates, rng)
    visited = st.n[:st.size] > 0
    if not visited.any():
        return Action(float(cand[0, 0]), float(cand[0, 1]))
    uct = _uct(st.q[:st.size][visited], st.n[:st.size][visited], parent_n, cfg.uct_c,
               cfg.reward_scale)
    if center is None:
        center = cfg.box_center
    bv = blind_values(st.acts[:st.size][visited], uct, cand, center, cfg)
    k = _argmax(bv, rng)
    return Action(float(cand[k, 0]), float(cand[k, 1]))


def _pick(q, n, parent_n, cfg: SearchConfig, rng) -> int:
    """Index of the UCT-maximal entry; unvisited entries come first."""
    fresh = n <= 0
    if fresh.any():
        fresh = fresh.nonzero()[0]
        return int(fresh[rng.integers(fresh.size)]) if fresh.size > 1 else int(fresh[0])
    return _argmax(_uct(q, n, parent_n, cfg.uct_c, cfg.reward_scale), rng)


def _widen_group(node: SearchNode, st: AgentStats, state, agent, cfg, rng, model):
    regions = [model.group_region(node.joint_state, agent, g) for g in range(N_GROUPS)]
    open_groups = [g for g in range(N_GROUPS) if regions[g] is not None]
    empty = [g for g in open_groups if st.group_count[g] == 0]
    if empty:
        g = empty[rng.integers(len(empty))] if len(empty) > 1 else empty[0]
        return g, regions[g]
    idx = np.array(open_groups)
    g = int(idx[_pick(st.group_q[idx], st.group_n[idx], node.n, cfg, rng)])
    return g, regions[g]


def select_agent_action(node: SearchNode, agent: int, cfg: SearchConfig, rng: np.random.Generator,
                        model) -> int:
    """Index (into the agent's explored set) of the action to play at ``node``."""
    st = node.per_agent[agent]
    state = node.joint_state
    if progressive_widening_due(node, agent, cfg):
        box = model.action_box(state, agent)
        region = box
        if cfg.use_groups:
            _, region = _widen_group(node, st, state, agent, cfg, rng, model)
        if cfg.guided:
            center = ((box[0] + box[1]) / 2, (box[2] + box[3]) / 2)
            a = blind_value_propose(st, node.n, cfg, rng, region, center)
        else:
            a = uniform_action(region, rng)
        return st.add(a, model.group_of(state, agent, a))
    s = st.size
    if cfg.use_groups:
        live = np.flatnonzero(st.group_count > 0)
        g = int(live[_pick(st.group_q[live], st.group_n[live], node.n, cfg, rng)])
        members = np.flatnonzero(st.grp[:s] == g)
        if members.size == 1:
            return int(members[0])
        k = _pick(st.q[members], st.n[members], max(st.group_n[g], 0.0), cfg, rng)
        return int(members[k])
    return _pick(st.q[:s], st.n[:s], node.n, cfg, rng)


def select_joint_action(node: SearchNode, cfg: SearchConfig, rng: np.random.Generator, model):
    """Each searched agent picks from its own statistics; scripted agents use the model default.

    Returns ``(joint_action, chosen_indices)``.
    """
    joint = []
    chosen = {}
    for i in range(len(node.joint_state)):
        st = node.per_agent.get(i)
        if st is None:
            joint.append(model.default_action(node.joint_state, i))
        else:
            k = select_agent_action(node, i, cfg, rng, model)
            chosen[i] = k
            joint.append(st.actions[k])
    return tuple(joint), chosen
