"""Halpern-Pearl actual causation by exhaustive witness search.

A candidate ``X = x`` (a conjunction of primitive events) is an actual cause of
``phi`` in ``(M, u)`` when

* AC1: ``X = x`` and ``phi`` both hold in ``(M, u)``;
* AC2a: for some partition ``(W, Z)`` of the endogenous variables with
  ``X`` in ``Z`` and some settings ``x'``, ``w``: ``[X <- x', W <- w] not phi``;
* AC2b: with ``z*`` the actual values of ``Z``, for every ``Z' <= Z``:
  ``[X <- x, W <- w, Z' <- z*] phi``;
* AC3: no strict sub-conjunction of ``X = x`` satisfies AC1 and AC2.

``W`` may contain any endogenous variable outside ``X``, the outcome included.
Partitions are tried by increasing ``|W|`` and the first witness found is
returned, so witnesses are as small as possible.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Optional

import numpy as np

from .scm import CausalModel, Formula, PrimitiveEvent, SCMError, evaluate, formula_events, holds

# in-training cause queries are refused above this many endogenous variables
ONLINE_LIMIT = 12


@dataclass(frozen=True)
class Witness:
    W: tuple
    w: tuple  # ((name, value), ...)
    x_prime: tuple  # ((name, value), ...)
    Z: tuple

    def __str__(self):
        w = ", ".join(f"{k}={v}" for k, v in self.w) or "-"
        xp = ", ".join(f"{k}={v}" for k, v in self.x_prime)
        return f"W={{{w}}} x'={{{xp}}}"


@dataclass(frozen=True)
class CauseVerdict:
    holds: bool
    witness: Optional[Witness] = None
    failed_clause: Optional[str] = None

    def __bool__(self):
        return self.holds


def _normalize(model: CausalModel, candidate) -> tuple:
    if isinstance(candidate, PrimitiveEvent):
        candidate = (candidate,)
    candidate = tuple(candidate)
    if not candidate:
        raise SCMError("candidate cause must have at least one conjunct")
    names = [e.var for e in candidate]
    if len(set(names)) != len(names):
        raise SCMError("candidate cause repeats a variable")
    for e in candidate:
        model.check_event(e)
    pos = {n: i for i, n in enumerate(model.endogenous)}
    return tuple(sorted(candidate, key=lambda e: pos[e.var]))


def _check_phi(model, phi):
    for e in formula_events(phi):
        model.check_event(e)


def check_online_size(model: CausalModel) -> None:
    if len(model.endogenous) > ONLINE_LIMIT:
        raise SCMError(
            f"model has {len(model.endogenous)} endogenous variables; online cause queries "
            f"are limited to {ONLINE_LIMIT}"
        )


def check_ac1(model: CausalModel, context, candidate, phi: Formula) -> bool:
    candidate = _normalize(model, candidate)
    _check_phi(model, phi)
    actual = evaluate(model, context)
    return all(actual[e.var] == e.value for e in candidate) and holds(phi, actual)


class _Search:
    """Witness search for one (model, context, phi); shares the compiled program."""

    def __init__(self, model: CausalModel, context, phi: Formula):
        self.model = model
        self.context = dict(context)
        self.phi = phi
        self.cm = model.compiled
        self.phi_prog = self.cm.compile_formula(phi)
        self.actual = evaluate(model, context)
        self.n = len(self.cm.names)

    def rows(self, count):
        return np.zeros((count, self.n), dtype=np.uint8), np.zeros((count, self.n), dtype=np.int64)

    def phi_rows(self, mask, forced):
        values = self.cm.evaluate_rows(self.context, mask, forced)
        return self.cm.formula_rows(self.phi_prog, values)

    def witness(self, candidate: tuple) -> tuple[Optional[Witness], str]:
        """First witness for ``candidate`` and, if none, which clause failed."""
        idx = self.cm.index
        xs = [e.var for e in candidate]
        x_actual = [e.value for e in candidate]
        others = [v for v in self.model.endogenous if v not in xs]
        x_alts = [xp for xp in product(*(self.model.range(v) for v in xs)) if list(xp) != x_actual]
        if not x_alts:
            return None, "AC2a"
        ac2a_seen = False
        for size in range(len(others) + 1):
            for W in combinations(others, size):
                Z = [v for v in self.model.endogenous if v not in W]
                w_settings = list(product(*(self.model.range(v) for v in W)))
                # AC2a rows: one per (w, x')
                n_rows = len(w_settings) * len(x_alts)
                mask, forced = self.rows(n_rows)
                r = 0
                for w in w_settings:
                    for xp in x_alts:
                        for v, val in zip(W, w):
                            mask[r, idx[v]] = 1
                            forced[r, idx[v]] = val
                        for v, val in zip(xs, xp):
                            mask[r, idx[v]] = 1
                            forced[r, idx[v]] = val
                        r += 1
                not_phi = self.phi_rows(mask, forced) == 0
                if not not_phi.any():
                    continue
                ac2a_seen = True
                ok_w = not_phi.reshape(len(w_settings), len(x_alts)).any(axis=1)
                for wi in np.flatnonzero(ok_w):
                    w = w_settings[wi]
                    if self._ac2b(xs, x_actual, W, w, Z):
                        xi = int(np.argmax(not_phi.reshape(len(w_settings), len(x_alts))[wi]))
                        return Witness(
                            W=tuple(W),
                            w=tuple(zip(W, w)),
                            x_prime=tuple(zip(xs, x_alts[xi])),
                            Z=tuple(Z),
                        ), ""
        return None, "AC2b" if ac2a_seen else "AC2a"

    def _ac2b(self, xs, x_actual, W, w, Z) -> bool:
        idx = self.cm.index
        # Z' ranging over subsets of Z \ X suffices: members of X in Z' would be
        # set to their actual values, which [X <- x] already does.
        free = [v for v in Z if v not in xs]
        n_rows = 1 << len(free)
        mask, forced = self.rows(n_rows)
        for v, val in list(zip(xs, x_actual)) + list(zip(W, w)):
            mask[:, idx[v]] = 1
            forced[:, idx[v]] = val
        bits = np.arange(n_rows)
        for b, v in enumerate(free):
            on = (bits >> b) & 1 == 1
            mask[on, idx[v]] = 1
            forced[on, idx[v]] = self.actual[v]
        return bool(self.phi_rows(mask, forced).all())


def find_witness(model: CausalModel, context, candidate, phi: Formula) -> Optional[Witness]:
    """A witness for AC2 (both parts), or ``None`` if there is none."""
    candidate = _normalize(model, candidate)
    _check_phi(model, phi)
    return _Search(model, context, phi).witness(candidate)[0]


def is_actual_cause(model: CausalModel, context, candidate, phi: Formula) -> CauseVerdict:
    candidate = _normalize(model, candidate)
    if not check_ac1(model, context, candidate, phi):
        return CauseVerdict(False, failed_clause="AC1")
    search = _Search(model, context, phi)
    witness, failed = search.witness(candidate)
    if witness is None:
        return CauseVerdict(False, failed_clause=failed)
    for k in range(1, len(candidate)):
        for sub in combinations(candidate, k):
            if search.witness(sub)[0] is not None:
                return CauseVerdict(False, failed_clause="AC3")
    return CauseVerdict(True, witness=witness)


def enumerate_actual_causes(
    model: CausalModel, context, phi: Formula, max_conjuncts: int = 1, online: bool = False
) -> list[tuple[tuple, Witness]]:
    """All actual causes of ``phi`` with at most ``max_conjuncts`` conjuncts.

    Candidates take their actual values in ``(M, u)`` and range over variables
    not mentioned in ``phi`` (an outcome is trivially a cause of itself).
    Results are ordered by
    the declaration order of their variables, shorter conjunctions first on
    ties. Returns ``[]`` when ``phi`` does not hold.
    """
    if max_conjuncts < 1:
        raise ValueError("max_conjuncts must be positive")
    if online:
        check_online_size(model)
    _check_phi(model, phi)
    actual = evaluate(model, context)
    if not holds(phi, actual):
        return []
    search = _Search(model, context, phi)
    has_ac2: dict[tuple, bool] = {}
    found = []
    outcome = {e.var for e in formula_events(phi)}
    names = tuple(v for v in model.endogenous if v not in outcome)
    for size in range(1, min(max_conjuncts, len(names)) + 1):
        for vars_ in combinations(names, size):
            candidate = tuple(PrimitiveEvent(v, actual[v]) for v in vars_)
            # AC3: a sub-conjunction satisfying AC1 and AC2 disqualifies this one
            minimal = not any(
                has_ac2.get(sub, False)
                for k in range(1, size)
                for sub in combinations(vars_, k)
            )
            witness, _ = search.witness(candidate)
            has_ac2[vars_] = witness is not None
            if witness is not None and minimal:
                found.append((candidate, witness))
    pos = {n: i for i, n in enumerate(names)}
    found.sort(key=lambda cw: tuple(pos[e.var] for e in cw[0]))
    return found


def verify_witness(model: CausalModel, context, candidate, phi: Formula, witness: Witness) -> bool:
    """Re-check AC2a and AC2b for ``witness`` with plain :func:`satisfies` calls."""
    from .scm import CausalFormula, Not, satisfies

    candidate = _normalize(model, candidate)
    xs = [e.var for e in candidate]
    ac2a = CausalFormula(tuple(witness.x_prime) + tuple(witness.w), Not(phi))
    if not satisfies(model, context, ac2a):
        return False
    actual = evaluate(model, context)
    base = [(e.var, e.value) for e in candidate] + list(witness.w)
    Z = list(witness.Z)
    for k in range(len(Z) + 1):
        for zs in combinations(Z, k):
            extra = [(z, actual[z]) for z in zs if z not in xs]
            if not satisfies(model, context, CausalFormula(tuple(base + extra), phi)):
                return False
    return True
