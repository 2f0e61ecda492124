"""Batch evaluation of a model under many interventions at once.

The compiled extension ``moralrl._kernel`` is used when it has been built;
otherwise the numpy fallback in ``moralrl._kernel_py`` is used. Setting the
environment variable ``MORALRL_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernel_py
from . import expr as ex

BACKEND = "python"
_impl = _kernel_py
if os.environ.get("MORALRL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def backends() -> dict:
    """Every importable backend, keyed by name."""
    out = {"python": _kernel_py}
    try:
        from . import _kernel as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out


class CompiledModel:
    """A causal model flattened into postfix programs, one per endogenous variable.

    Variables are indexed in declaration order; programs are stored in
    topological order.
    """

    def __init__(self, model, impl=None):
        self.model = model
        self.impl = impl or _impl
        self.names = [v.name for v in model.variables]
        self.index = {n: i for i, n in enumerate(self.names)}
        self.endo_index = np.array([self.index[n] for n in model.endogenous], dtype=np.int64)
        programs = []
        depth = 1
        for name in model.order:
            prog, d = ex.compile_program(model.equations[name], self.index)
            programs.append(prog)
            depth = max(depth, d)
        lengths = [len(p) for p in programs]
        self.ends = np.cumsum(lengths, dtype=np.int64)
        self.starts = self.ends - np.asarray(lengths, dtype=np.int64)
        self.code = np.ascontiguousarray(
            np.concatenate(programs) if programs else np.zeros((0, 2), dtype=np.int64)
        )
        self.order = np.array([self.index[n] for n in model.order], dtype=np.int64)
        self.stack_size = depth
        self._ranges = [(self.index[n], np.asarray(model.range(n))) for n in model.endogenous]

    def base(self, context) -> np.ndarray:
        base = np.zeros(len(self.names), dtype=np.int64)
        for name, value in context.items():
            base[self.index[name]] = value
        return base

    def evaluate_rows(self, context, mask, forced, check_ranges=True) -> np.ndarray:
        """Full variable values (declaration order) for each intervention row."""
        out = self.impl.evaluate_rows(
            self.code, self.starts, self.ends, self.order, self.base(context),
            np.ascontiguousarray(mask, dtype=np.uint8), np.ascontiguousarray(forced, dtype=np.int64),
            self.stack_size,
        )
        if check_ranges and len(out):
            for j, allowed in self._ranges:
                bad = ~np.isin(out[:, j], allowed)
                if bad.any():
                    from .scm import SCMError

                    r = int(np.argmax(bad))
                    raise SCMError(
                        f"equation for {self.names[j]} produced {out[r, j]}, outside range {tuple(allowed)}"
                    )
        return out

    def compile_formula(self, formula):
        from .scm import formula_to_expr

        return ex.compile_program(formula_to_expr(formula), self.index)

    def formula_rows(self, program, values) -> np.ndarray:
        """Truth (0/1) of a compiled formula on each row of ``values``."""
        code, depth = program
        if len(values) == 0:
            return np.zeros(0, dtype=np.int64)
        return self.impl.run_rows(code, np.ascontiguousarray(values, dtype=np.int64), depth)
