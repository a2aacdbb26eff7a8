"""Search configuration shared by the tree search, the simulator and scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

ENHANCEMENTS = {
    "basic": dict(use_groups=False, guided=False, similarity=False),
    "guided": dict(use_groups=False, guided=True, similarity=False),
    "groups": dict(use_groups=True, guided=False, similarity=False),
    "groups+guided": dict(use_groups=True, guided=True, similarity=False),
    "groups+guided+similarity": dict(use_groups=True, guided=True, similarity=True),
}


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 1000
    max_depth: int = 4
    discount: float = 0.9
    uct_c: float = 0.7
    pw_c: float = 1.0
    pw_alpha: float = 0.5
    kernel_gamma: float = 0.5
    kernel_dims_scale: tuple[float, float] = (1.0, 1.0)
    bv_candidates: int = 20
    initial_actions_per_agent: int = 5
    seed: int = 0

    # action box and primitive timing
    duration: float = 2.0
    dt: float = 0.1
    dv_bounds: tuple[float, float] = (-5.0, 5.0)
    dy_bounds: tuple[float, float] = (-4.0, 4.0)
    dv_step: float = 2.0
    eps_dv: float = 0.5

    # exploitation term uses q / reward_scale
    reward_scale: float = 20.0
    use_groups: bool = True
    guided: bool = True
    similarity: bool = True
    bv_mode: str = "literal"
    n_min_final: float = 1.0
    rollout_keep_prob: float = 0.5
    rollout_resamples: int = 3

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.uct_c < 0:
            raise ValueError("uct_c must be >= 0")
        if self.pw_c < 0:
            raise ValueError("pw_c must be >= 0")
        if not 0.0 <= self.pw_alpha <= 1.0:
            raise ValueError("pw_alpha must lie in [0, 1]")
        if not self.kernel_gamma > 0:
            raise ValueError("kernel_gamma must be > 0")
        if len(self.kernel_dims_scale) != 2 or min(self.kernel_dims_scale) <= 0:
            raise ValueError("kernel_dims_scale must be two positive numbers")
        if self.bv_candidates < 1:
            raise ValueError("bv_candidates must be >= 1")
        if self.initial_actions_per_agent < 1:
            raise ValueError("initial_actions_per_agent must be >= 1")
        if not self.duration > 0 or not 0 < self.dt <= self.duration:
            raise ValueError("need duration > 0 and 0 < dt <= duration")
        for lo, hi in (self.dv_bounds, self.dy_bounds):
            if not lo < hi:
                raise ValueError("action box bounds must satisfy lo < hi")
        if not self.reward_scale > 0:
            raise ValueError("reward_scale must be > 0")
        if self.bv_mode not in ("literal", "distance"):
            raise ValueError("bv_mode must be 'literal' or 'distance'")
        if not 0.0 <= self.rollout_keep_prob <= 1.0:
            raise ValueError("rollout_keep_prob must lie in [0, 1]")

    @property
    def box_center(self) -> tuple[float, float]:
        return (0.5 * sum(self.dv_bounds), 0.5 * sum(self.dy_bounds))

    @property
    def kernel_is_indicator(self) -> bool:
        return not self.similarity or math.isinf(self.kernel_gamma)

    def with_enhancements(self, name: str) -> "SearchConfig":
        try:
            flags = ENHANCEMENTS[name]
        except KeyError:
            raise ValueError(f"unknown enhancement set {name!r}; choose from {sorted(ENHANCEMENTS)}")
        return replace(self, **flags)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown search config field(s): {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kw)
