"""Unoptimized transcription of the Halpern-Pearl definition of actual cause.

Works on :class:`randmodels.TableModel` with its own evaluator and shares no
code with ``moralrl.causes``. Every partition, every setting and every subset
is enumerated literally; nothing is pruned.

``phi`` is ``(kind, events)`` with ``kind`` in {"and", "or"} and ``events`` a
list of ``(var, value)`` pairs.
"""
from __future__ import annotations

import itertools

from randmodels import TableModel, table_eval


def phi_true(phi, values) -> bool:
    kind, events = phi
    checks = [values[v] == x for v, x in events]
    return all(checks) if kind == "and" else any(checks)


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def ac1(m: TableModel, u, cause: dict, phi) -> bool:
    actual = table_eval(m, u)
    return all(actual[v] == x for v, x in cause.items()) and phi_true(phi, actual)


def ac2(m: TableModel, u, cause: dict, phi) -> bool:
    actual = table_eval(m, u)
    xs = list(cause)
    others = [v for v in m.endo if v not in cause]
    for W in subsets(others):
        Z = [v for v in m.endo if v not in W]  # contains X
        for w in itertools.product((0, 1), repeat=len(W)):
            setting_w = dict(zip(W, w))
            for xp in itertools.product((0, 1), repeat=len(xs)):
                setting = {**dict(zip(xs, xp)), **setting_w}
                if phi_true(phi, table_eval(m, u, setting)):
                    continue  # AC2a fails for this (x', w)
                ok = True
                for Zp in subsets(Z):
                    setting_b = {**cause, **setting_w, **{z: actual[z] for z in Zp}}
                    if not phi_true(phi, table_eval(m, u, setting_b)):
                        ok = False
                        break
                if ok:
                    return True
    return False


def is_cause(m: TableModel, u, cause: dict, phi) -> bool:
    if not ac1(m, u, cause, phi):
        return False
    if not ac2(m, u, cause, phi):
        return False
    for sub in subsets(cause):
        if 0 < len(sub) < len(cause):
            part = {v: cause[v] for v in sub}
            if ac1(m, u, part, phi) and ac2(m, u, part, phi):
                return False
    return True
