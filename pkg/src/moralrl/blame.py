"""Online time-to-event estimates and the blame they induce.

For each watched event an :class:`EventEstimator` keeps, per (state, action):

* ``p``: the fraction of visits in which the event occurred during that step
  (an exact running sample average);
* ``m1``, ``m2``: first and second moments of the number of further steps
  until the event, learned with soft updates towards

      m1 <- (1 - p) * (1 + m1[s', a'])
      m2 <- (1 - p) * (1 + m2[s', a'] + 2 * m1[s', a'])

  where a terminal ``s'`` is replaced by a normal prior on the time the event
  would happen after the episode ends.

The time estimate for a percentile offset ``eta`` is ``m1 + eta * sigma``.
Blame for taking ``a`` in ``s`` is one minus the ratio of that estimate to the
longest postponement time remembered so far in the episode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence


@dataclass(frozen=True)
class EstimatorConfig:
    alpha: float = 0.05
    eta: float = 0.0
    prior_mean: float = 10.0
    prior_var: float = 10.0
    denominator_floor: float = 1e-9

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.prior_var < 0:
            raise ValueError("prior_var must be non-negative")
        if self.denominator_floor <= 0:
            raise ValueError("denominator_floor must be positive")

    @property
    def prior_m2(self) -> float:
        return self.prior_var + self.prior_mean ** 2


def moment_targets(p: float, m1_next: float, m2_next: float) -> tuple[float, float]:
    """Soft-update targets for (m1, m2) given the successor's moments."""
    q = 1.0 - p
    return q * (1.0 + m1_next), q * (1.0 + m2_next + 2.0 * m1_next)


class EventEstimator:
    """Time-to-event tables for one event."""

    def __init__(self, event, config: EstimatorConfig = EstimatorConfig()):
        self.event = event
        self.config = config
        self.p: dict = {}
        self.n: dict = {}
        self.m1: dict = {}
        self.m2: dict = {}

    def moments(self, s: Hashable, a: int) -> tuple[float, float]:
        key = (s, a)
        if key in self.m1:
            return self.m1[key], self.m2[key]
        return self.config.prior_mean, self.config.prior_m2

    def sigma(self, s, a) -> float:
        m1, m2 = self.moments(s, a)
        return math.sqrt(max(m2 - m1 * m1, 0.0))

    def time_estimate(self, s, a, eta: Optional[float] = None) -> float:
        """``m1 + eta * sigma`` for (s, a), floored at zero."""
        eta = self.config.eta if eta is None else eta
        m1, _ = self.moments(s, a)
        t = m1 + eta * self.sigma(s, a) if eta else m1
        return max(t, 0.0)

    def postpone_time(self, s, actions: Sequence[int], eta: Optional[float] = None) -> float:
        """Largest time estimate over the actions available in ``s``."""
        return max(self.time_estimate(s, a, eta) for a in actions)

    def update(self, s, a, occurred: bool, s_next=None, a_next=None, terminal: bool = False) -> None:
        key = (s, a)
        n = self.n.get(key, 0) + 1
        self.n[key] = n
        p = self.p.get(key, 0.0)
        p += (float(occurred) - p) / n
        self.p[key] = p
        if terminal:
            m1n, m2n = self.config.prior_mean, self.config.prior_m2
        else:
            m1n, m2n = self.moments(s_next, a_next)
        t1, t2 = moment_targets(p, m1n, m2n)
        m1, m2 = self.moments(s, a)
        alpha = self.config.alpha
        self.m1[key] = m1 + alpha * (t1 - m1)
        self.m2[key] = m2 + alpha * (t2 - m2)

    def rows(self):
        """(state, action, p, m1, m2, n) for every visited pair."""
        for key in sorted(self.m1, key=repr):
            s, a = key
            yield s, a, self.p[key], self.m1[key], self.m2[key], self.n[key]


@dataclass
class BlameTracker:
    """Per-episode memory of the longest postponement time for one event."""

    event: object
    t_plus: float = math.nan
    step: int = -1
    last_blame: Optional[float] = None
    history: list = field(default_factory=list)

    def reset(self) -> None:
        self.t_plus = math.nan
        self.step = -1
        self.last_blame = None
        self.history.clear()

    def update_t_plus(self, est: EventEstimator, s, actions: Sequence[int], eta: Optional[float] = None,
                      step: Optional[int] = None) -> float:
        """Advance to ``step`` in state ``s``; uses the ``-eta`` percentile."""
        step = self.step + 1 if step is None else step
        if step != self.step + 1:
            raise ValueError(f"t_plus updated for step {step}, expected {self.step + 1}")
        eta = est.config.eta if eta is None else eta
        t = est.postpone_time(s, actions, -eta)
        self.t_plus = t if step == 0 else max(self.t_plus - 1.0, t)
        self.step = step
        self.history.append(self.t_plus)
        return self.t_plus

    def blame(self, est: EventEstimator, s, a, eta: Optional[float] = None) -> float:
        if self.step < 0:
            raise ValueError("blame requested before t_plus was initialised")
        if self.t_plus <= est.config.denominator_floor:
            return 0.0
        b = 1.0 - est.time_estimate(s, a, eta) / self.t_plus
        return min(max(b, 0.0), 1.0)
