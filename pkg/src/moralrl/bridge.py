"""Link an episodic MDP to a causal model.

Each exogenous variable starts at a default value and takes the first
non-default value observed from the environment, after which it is frozen for
the rest of the episode. Endogenous events are detected by evaluating the model
on the absorbed context before and after each step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

from .scm import CausalModel, PrimitiveEvent, SCMError, evaluate

Event = Union[PrimitiveEvent, tuple]

# state (plus transition info) -> {exogenous name: observed value}
StateAbstraction = Callable[..., Mapping[str, int]]


class ExoTrace:
    """Absorbing record of exogenous values for one episode."""

    def __init__(self, model: CausalModel, defaults: Optional[Mapping[str, int]] = None):
        self.model = model
        if defaults is None:
            defaults = {u: 0 for u in model.exogenous}
        model.check_context(defaults)
        self.defaults = dict(defaults)
        self.values = dict(defaults)
        self.step = -1
        self.changes = {u: 0 for u in model.exogenous}

    def absorb_step(self, observed: Mapping[str, int]) -> "ExoTrace":
        """Advance one step with the abstraction's output for the new state."""
        for u, default in self.defaults.items():
            if u not in observed:
                continue
            value = observed[u]
            if value not in self.model.range(u):
                raise SCMError(f"abstraction gave {u}={value}, outside range {self.model.range(u)}")
            if self.values[u] == default and value != default:
                self.values[u] = value
                self.changes[u] += 1
        self.step += 1
        return self

    def snapshot_context(self) -> dict:
        return dict(self.values)

    def key(self) -> tuple:
        return tuple(self.values[u] for u in self.model.exogenous)


def snapshot_context(trace: ExoTrace) -> dict:
    return trace.snapshot_context()


def absorb_step(trace: ExoTrace, observed: Mapping[str, int]) -> ExoTrace:
    return trace.absorb_step(observed)


def event_holds(event: Event, values: Mapping[str, int]) -> bool:
    if isinstance(event, PrimitiveEvent):
        return values[event.var] == event.value
    return all(values[e.var] == e.value for e in event)


class CachedEvaluator:
    """``evaluate`` memoized on the context; contexts repeat constantly in training."""

    def __init__(self, model: CausalModel):
        self.model = model
        self._cache: dict[tuple, dict] = {}

    def __call__(self, context: Mapping[str, int]) -> dict:
        key = tuple(context[u] for u in self.model.exogenous)
        out = self._cache.get(key)
        if out is None:
            out = self._cache[key] = evaluate(self.model, context)
        return out


def detect_events(model, before: Mapping[str, int], after: Mapping[str, int], watchlist: Sequence[Event],
                  evaluator=None) -> list[bool]:
    """Which watched events become true between two consecutive snapshots."""
    ev = evaluator or (lambda ctx: evaluate(model, ctx))
    vb, va = ev(before), ev(after)
    return [event_holds(e, va) and not event_holds(e, vb) for e in watchlist]


@dataclass
class EventStatus:
    event: Event
    occurred: bool = False
    first_step: Optional[int] = None


@dataclass
class EventMonitor:
    """Per-episode occurrence status for a list of watched events."""

    model: CausalModel
    watchlist: list
    evaluator: Optional[CachedEvaluator] = None
    statuses: list = field(default_factory=list)

    def start(self, context: Mapping[str, int]) -> None:
        # events already true under the initial context count as having occurred at step -1
        ev = self.evaluator or CachedEvaluator(self.model)
        self.evaluator = ev
        values = ev(context)
        self.statuses = []
        for e in self.watchlist:
            pre = event_holds(e, values)
            self.statuses.append(EventStatus(e, pre, -1 if pre else None))

    def update(self, step: int, before: Mapping[str, int], after: Mapping[str, int]) -> list[bool]:
        """Flags of events first occurring at ``step``."""
        flags = detect_events(self.model, before, after, self.watchlist, self.evaluator)
        out = []
        for status, flag in zip(self.statuses, flags):
            new = flag and not status.occurred
            if new:
                status.occurred = True
                status.first_step = step
            out.append(new)
        return out
