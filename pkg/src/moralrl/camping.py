"""Sequential version of the camping vignette.

The agent may wait (0), try to camp at the safe spot (1) or at the unsafe spot
(2). A camping attempt succeeds with probability ``p_A``; camping happens at
most once per episode. Unsafe camping burns the forest at once. While the
forest stands, a pyromaniac burns it with probability ``p_pyro`` per step. A
burned forest costs ``reward_fire`` and ends the episode.

Within a step the agent's action is resolved before the pyromaniac.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

WAIT, CAMP_SAFE, CAMP_UNSAFE = 0, 1, 2
ACTIONS = (WAIT, CAMP_SAFE, CAMP_UNSAFE)
ACTION_NAMES = ("wait", "camp_safe", "camp_unsafe")
NONE, SAFE, UNSAFE = 0, 1, 2
CAMP_NAMES = ("none", "safe", "unsafe")


@dataclass(frozen=True)
class CampConfig:
    p_pyro: float = 0.1
    p_A: float = 1.0
    reward_safe: float = 10.0
    reward_unsafe: float = 20.0
    reward_fire: float = -100.0
    max_steps: int = 2000

    def __post_init__(self):
        for name in ("p_pyro", "p_A"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class CampState:
    camp: int = NONE
    burned: bool = False
    step: int = 0
    terminal: bool = False

    @property
    def obs(self) -> int:
        """What the agents condition on: the camp status."""
        return self.camp


def reset(config: CampConfig = None) -> CampState:
    return CampState()


def step(state: CampState, action: int, rng: np.random.Generator, config: CampConfig):
    """Advance one step; returns ``(next_state, reward, done, info)``."""
    if state.terminal:
        raise ValueError("cannot step a terminal state")
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action}")
    reward = 0.0
    camp, burned = state.camp, False
    camped_now = NONE
    if camp == NONE and action != WAIT and rng.random() < config.p_A:
        camp = camped_now = action
        reward += config.reward_safe if action == CAMP_SAFE else config.reward_unsafe
        burned = action == CAMP_UNSAFE
    pyro = False
    if not burned and rng.random() < config.p_pyro:
        pyro = burned = True
    if burned:
        reward += config.reward_fire
    t = state.step + 1
    done = burned or t >= config.max_steps
    info = {"camped": camped_now, "pyro": pyro, "fire": burned}
    return CampState(camp, burned, t, done), reward, done, info


def exo_abstraction(state: CampState, info: dict) -> dict:
    """Exogenous observations for the camping SCM after a transition."""
    return {"U_A": info["camped"], "U_P": int(info["pyro"])}


class CampingEnv:
    """Stateful wrapper owning its RNG."""

    actions = ACTIONS
    n_actions = len(ACTIONS)
    outcome_variable = "F"

    def __init__(self, config: CampConfig = CampConfig(), rng=None):
        self.config = config
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.state = reset(config)

    def reset(self) -> CampState:
        self.state = reset(self.config)
        return self.state

    def step(self, action: int):
        self.state, reward, done, info = step(self.state, action, self.rng, self.config)
        return self.state, reward, done, info

    def exo_abstraction(self, state, info):
        return exo_abstraction(state, info)

    def with_config(self, **changes) -> "CampingEnv":
        return CampingEnv(replace(self.config, **changes), self.rng)
