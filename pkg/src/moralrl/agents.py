"""Tabular epsilon-greedy Q-learning and the blame-aware (AC) agent.

The AC agent learns from a modified terminal reward: when the episode ends with
a non-default outcome, the actual causes of the outcome are computed on the
absorbed context, and the outcome penalty is scaled by the largest blame among
those causes. Step rewards pass through unchanged.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .blame import BlameTracker, EstimatorConfig, EventEstimator
from .bridge import CachedEvaluator, EventMonitor, ExoTrace
from .causes import check_online_size, enumerate_actual_causes
from .scm import CausalModel, PrimitiveEvent, SCMError


class InvariantViolation(AssertionError):
    pass


class ModelInconsistency(SCMError):
    """The outcome happened but the model names no actual cause for it."""


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 0.05
    epsilon: float = 0.1
    gamma: float = 0.99

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


class QTable:
    """Action values per state; unseen states read as all zeros."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.values: dict = {}

    def __getitem__(self, s) -> list:
        row = self.values.get(s)
        if row is None:
            row = self.values[s] = [0.0] * self.n_actions
        return row

    def greedy(self, s) -> int:
        row = self[s]
        return row.index(max(row))  # lowest index wins ties

    def rows(self):
        for s in sorted(self.values, key=repr):
            yield s, list(self.values[s])


def select_action(q: QTable, s, epsilon: float, rng: np.random.Generator) -> int:
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.random() * q.n_actions)
    return q.greedy(s)


def q_update(q: QTable, s, a: int, r: float, s_next, terminal: bool, config: AgentConfig) -> None:
    row = q[s]
    target = r if terminal else r + config.gamma * max(q[s_next])
    row[a] += config.alpha * (target - row[a])


@dataclass(frozen=True)
class RewardModel:
    """Reward attached to values of the outcome variable; the no-event value pays 0."""

    outcome: str = "F"
    rewards: tuple = ((0, 0.0), (1, -100.0))
    no_event: int = 0

    def __post_init__(self):
        if dict(self.rewards).get(self.no_event, 0.0) != 0.0:
            raise ValueError("the no-event outcome must have reward 0")

    def __call__(self, value: int) -> float:
        return dict(self.rewards).get(value, 0.0)


def modified_terminal_reward(causes, outcome_value: int, reward_model: RewardModel) -> float:
    """Outcome reward scaled by the largest blame among its actual causes.

    Args:
        causes: ``(cause, blame)`` pairs.
    """
    if outcome_value == reward_model.no_event:
        return 0.0
    causes = list(causes)
    if not causes:
        raise ModelInconsistency(
            f"{reward_model.outcome}={outcome_value} occurred but no actual cause was found"
        )
    return max(b for _, b in causes) * reward_model(outcome_value)


def cause_label(cause) -> str:
    if isinstance(cause, PrimitiveEvent):
        return str(cause)
    return "&".join(str(e) for e in cause)


@dataclass
class EpisodeLog:
    episode: int
    raw_return: float
    modified_return: float
    length: int
    outcome: int = 0
    blames: dict = field(default_factory=dict)


class QAgent:
    """Plain tabular Q-learning on the environment reward."""

    label = "q"

    def __init__(self, n_actions: int, config: AgentConfig = AgentConfig(), rng=None):
        self.config = config
        self.q = QTable(n_actions)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.episodes = 0

    def act(self, s, epsilon=None) -> int:
        return select_action(self.q, s, self.config.epsilon if epsilon is None else epsilon, self.rng)

    def train_episode(self, env) -> EpisodeLog:
        state = env.reset()
        s = state.obs
        total, t = 0.0, 0
        while True:
            a = self.act(s)
            state, r, done, _ = env.step(a)
            s2 = state.obs
            q_update(self.q, s, a, r, s2, done, self.config)
            total += r
            t += 1
            if done:
                break
            s = s2
        log = EpisodeLog(self.episodes, total, total, t)
        self.episodes += 1
        return log


class ACAgent(QAgent):
    """Q-learning on blame-modified terminal rewards.

    Args:
        model: causal model whose exogenous variables the environment feeds.
        reward_model: outcome variable and its rewards (as paid by the environment).
        defaults: default exogenous values; 0 for every variable if omitted.
        check_invariants: assert the blame, absorption and consistency
            invariants at every step.
    """

    label = "ac"

    def __init__(self, model: CausalModel, n_actions: int, config: AgentConfig = AgentConfig(),
                 estimator: EstimatorConfig = EstimatorConfig(), reward_model: RewardModel = RewardModel(),
                 rng=None, max_conjuncts: int = 1, defaults: Optional[Mapping[str, int]] = None,
                 check_invariants: bool = True):
        super().__init__(n_actions, config, rng)
        check_online_size(model)
        self.model = model
        self.estimator_config = estimator
        self.reward_model = reward_model
        self.max_conjuncts = max_conjuncts
        self.defaults = defaults
        self.check_invariants = check_invariants
        self.actions = tuple(range(n_actions))
        self.registry: OrderedDict = OrderedDict()  # cause -> EventEstimator
        self.trackers: dict = {}
        self.evaluator = CachedEvaluator(model)
        self._cause_cache: dict = {}
        self.phi = PrimitiveEvent(reward_model.outcome, 1)
        self.invariant_checks = 0

    def causes_of(self, context: Mapping[str, int], outcome_value: int) -> list:
        key = (tuple(context[u] for u in self.model.exogenous), outcome_value)
        found = self._cause_cache.get(key)
        if found is None:
            phi = PrimitiveEvent(self.reward_model.outcome, outcome_value)
            found = [c for c, _ in enumerate_actual_causes(self.model, context, phi, self.max_conjuncts, online=True)]
            self._cause_cache[key] = found
        return found

    def _fail(self, message: str):
        raise InvariantViolation(message)

    def train_episode(self, env) -> EpisodeLog:
        cfg, est_cfg = self.config, self.estimator_config
        state = env.reset()
        s = state.obs
        trace = ExoTrace(self.model, self.defaults)
        events = list(self.registry)
        estimators = [self.registry[e] for e in events]
        trackers = [self.trackers[e] for e in events]
        monitor = EventMonitor(self.model, events, self.evaluator)
        monitor.start(trace.values)
        for est, tr in zip(estimators, trackers):
            tr.reset()
            tr.update_t_plus(est, s, self.actions, est_cfg.eta, step=0)
        a = self.act(s)
        raw = modified = 0.0
        t = 0
        blame_at: dict = {}
        self._last_blames = {}
        outcome = self.reward_model.no_event
        while True:
            before = trace.snapshot_context()
            state, r, done, info = env.step(a)
            trace.absorb_step(env.exo_abstraction(state, info))
            after = trace.snapshot_context()
            new = monitor.update(t, before, after)
            for i, e in enumerate(events):
                if new[i]:
                    b = trackers[i].blame(estimators[i], s, a, est_cfg.eta)
                    if self.check_invariants and not 0.0 <= b <= 1.0:
                        self._fail(f"blame {b} for {cause_label(e)} outside [0, 1] at step {t}")
                    trackers[i].last_blame = b
                    blame_at[e] = b
            s2 = state.obs
            a2 = None if done else self.act(s2)
            for i, status in enumerate(monitor.statuses):
                # estimates condition on the event not having happened before this step
                if status.first_step is None or status.first_step == t:
                    estimators[i].update(s, a, new[i], s2, a2, done)
            r_learn = r
            if done:
                outcome = self.evaluator(after)[self.reward_model.outcome]
                r_learn = r + self._terminal_adjustment(after, outcome, blame_at, monitor)
                if self.check_invariants:
                    self._check_terminal(trace, info, outcome)
            raw += r
            modified += r_learn
            q_update(self.q, s, a, r_learn, s2, done, cfg)
            t += 1
            if done:
                break
            s, a = s2, a2
            for est, tr in zip(estimators, trackers):
                prev = tr.t_plus
                tr.update_t_plus(est, s, self.actions, est_cfg.eta, step=t)
                if self.check_invariants and tr.t_plus < prev - 1.0:
                    self._fail(f"t_plus fell from {prev} to {tr.t_plus} in one step")
        log = EpisodeLog(self.episodes, raw, modified, t, outcome, self._last_blames)
        self.episodes += 1
        return log

    def _terminal_adjustment(self, context, outcome, blame_at, monitor) -> float:
        """Replace the raw outcome reward by its blame-weighted version."""
        if outcome == self.reward_model.no_event:
            return 0.0
        scored = []
        for cause in self.causes_of(context, outcome):
            if cause not in self.registry:
                b = 1.0  # unseen cause: no estimates yet
            elif cause in blame_at:
                b = blame_at[cause]
            else:
                b = 0.0  # held from the episode's start, so no action of ours brought it about
            if self.check_invariants and not 0.0 <= b <= 1.0:
                self._fail(f"blame {b} for {cause_label(cause)} outside [0, 1]")
            scored.append((cause, b))
            self._last_blames[cause_label(cause)] = b
        adjusted = modified_terminal_reward(scored, outcome, self.reward_model)
        for cause, _ in scored:
            if cause not in self.registry:
                self.registry[cause] = EventEstimator(cause, self.estimator_config)
                self.trackers[cause] = BlameTracker(cause)
        return adjusted - self.reward_model(outcome)

    def _check_terminal(self, trace, info, outcome):
        self.invariant_checks += 1
        for u, n in trace.changes.items():
            if n > 1:
                self._fail(f"exogenous {u} changed {n} times in one episode")
        if "fire" in info and bool(info["fire"]) != (outcome != self.reward_model.no_event):
            self._fail(f"environment fire={info['fire']} but the model gives {self.reward_model.outcome}={outcome}")


def run_greedy(agent: QAgent, env, episodes: int, epsilon: float = 0.0, rng=None) -> list:
    """Raw returns of ``agent``'s policy over fresh episodes, without learning."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    returns = []
    for _ in range(episodes):
        state = env.reset()
        total = 0.0
        done = False
        while not done:
            a = select_action(agent.q, state.obs, epsilon, rng)
            state, r, done, _ = env.step(a)
            total += r
        returns.append(total)
    return returns
