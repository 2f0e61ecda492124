"""Acyclic structural causal models over finite integer ranges.

A :class:`CausalModel` holds a signature (exogenous and endogenous variables
with their ranges) and one structural equation per endogenous variable. A
context assigns every exogenous variable; it determines all endogenous values
through :func:`evaluate`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from . import expr as ex

EXO = "exo"
ENDO = "endo"


class SCMError(ValueError):
    """Invalid model construction or an evaluation that leaves a variable's range."""


class CycleError(SCMError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in (EXO, ENDO):
            raise SCMError(f"variable {self.name}: kind must be 'exo' or 'endo'")
        if not self.values:
            raise SCMError(f"variable {self.name}: empty range")
        if len(set(self.values)) != len(self.values):
            raise SCMError(f"variable {self.name}: duplicate values in range")


@dataclass(frozen=True, order=True)
class PrimitiveEvent:
    var: str
    value: int

    def __str__(self):
        return f"{self.var}={self.value}"


@dataclass(frozen=True)
class Not:
    operand: "Formula"

    def __str__(self):
        return f"!{_paren(self.operand)}"


@dataclass(frozen=True)
class And:
    parts: tuple

    def __str__(self):
        return " & ".join(_paren(p) for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __str__(self):
        return " | ".join(_paren(p) for p in self.parts)


Formula = Union[PrimitiveEvent, Not, And, Or]


def _paren(f) -> str:
    return str(f) if isinstance(f, (PrimitiveEvent, Not)) else f"({f})"


def conjunction(events: Iterable[PrimitiveEvent]) -> Formula:
    events = tuple(events)
    return events[0] if len(events) == 1 else And(events)


def holds(formula: Formula, values: Mapping[str, int]) -> bool:
    """Truth of a Boolean combination of primitive events under ``values``."""
    if isinstance(formula, PrimitiveEvent):
        return values[formula.var] == formula.value
    if isinstance(formula, Not):
        return not holds(formula.operand, values)
    if isinstance(formula, And):
        return all(holds(p, values) for p in formula.parts)
    if isinstance(formula, Or):
        return any(holds(p, values) for p in formula.parts)
    raise TypeError(f"not a formula: {formula!r}")


def formula_events(formula: Formula) -> list[PrimitiveEvent]:
    if isinstance(formula, PrimitiveEvent):
        return [formula]
    if isinstance(formula, Not):
        return formula_events(formula.operand)
    return [e for p in formula.parts for e in formula_events(p)]


def formula_to_expr(formula: Formula) -> ex.Expr:
    """The 0/1 expression equivalent of ``formula``; used by the batch kernels."""
    if isinstance(formula, PrimitiveEvent):
        return ex.BinOp("==", ex.Var(formula.var), ex.Const(formula.value))
    if isinstance(formula, Not):
        return ex.UnaryOp("not", formula_to_expr(formula.operand))
    op = "and" if isinstance(formula, And) else "or"
    out = formula_to_expr(formula.parts[0])
    for p in formula.parts[1:]:
        out = ex.BinOp(op, out, formula_to_expr(p))
    return out


@dataclass(frozen=True)
class CausalFormula:
    """``[Y1 <- y1, ..., Yk <- yk] body``."""

    interventions: tuple
    body: Formula

    def __str__(self):
        if not self.interventions:
            return str(self.body)
        setting = ", ".join(f"{k} <- {v}" for k, v in self.interventions)
        return f"[{setting}]({self.body})"


class CausalModel:
    """An acyclic SCM.

    Args:
        variables: all variables in declaration order.
        equations: endogenous variable name -> expression body.
    """

    def __init__(self, variables: Sequence[Variable], equations: Mapping[str, ex.Expr]):
        self.variables = tuple(variables)
        self._by_name = {}
        for v in self.variables:
            if v.name in self._by_name:
                raise SCMError(f"duplicate variable {v.name}")
            self._by_name[v.name] = v
        for name in equations:
            if name not in self._by_name:
                raise SCMError(f"equation for undeclared variable {name}")
            if self._by_name[name].kind == EXO:
                raise SCMError(f"equation given for exogenous variable {name}")
        self.equations = {}
        self.parents = {}
        for v in self.variables:
            if v.kind != ENDO:
                continue
            if v.name not in equations:
                raise SCMError(f"endogenous variable {v.name} has no equation")
            body = equations[v.name]
            refs = ex.variables(body)
            for r in refs:
                if r not in self._by_name:
                    raise SCMError(f"equation for {v.name} references undeclared variable {r}")
            self.equations[v.name] = body
            self.parents[v.name] = tuple(refs)
        self.exogenous = tuple(v.name for v in self.variables if v.kind == EXO)
        self.endogenous = tuple(v.name for v in self.variables if v.kind == ENDO)
        self.order = self._topological_order()

    def _topological_order(self) -> tuple:
        # Kahn's algorithm; ties resolved by declaration order so the result is stable
        endo = self.endogenous
        pending = {x: {p for p in self.parents[x] if p in self.equations} for x in endo}
        order = []
        while pending:
            ready = [x for x in endo if x in pending and not pending[x]]
            if not ready:
                cyc = ", ".join(x for x in endo if x in pending)
                raise CycleError(f"cyclic dependency among {cyc}")
            x = ready[0]
            order.append(x)
            del pending[x]
            for deps in pending.values():
                deps.discard(x)
        return tuple(order)

    def __getitem__(self, name: str) -> Variable:
        return self._by_name[name]

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def range(self, name: str) -> tuple:
        return self._by_name[name].values

    def __repr__(self):
        return f"CausalModel(exogenous={self.exogenous}, endogenous={self.endogenous})"

    @cached_property
    def compiled(self):
        """Flat program form of this model for the batch kernels."""
        from .kernel import CompiledModel

        return CompiledModel(self)

    def check_context(self, context: Mapping[str, int]) -> None:
        for name in self.exogenous:
            if name not in context:
                raise SCMError(f"context missing exogenous variable {name}")
            if context[name] not in self.range(name):
                raise SCMError(f"context value {name}={context[name]} outside range {self.range(name)}")
        for name in context:
            if name not in self._by_name or self._by_name[name].kind != EXO:
                raise SCMError(f"context assigns non-exogenous name {name}")

    def check_event(self, event: PrimitiveEvent) -> None:
        if event.var not in self._by_name:
            raise SCMError(f"unknown variable {event.var}")
        if self._by_name[event.var].kind != ENDO:
            raise SCMError(f"{event.var} is exogenous; events must be endogenous")
        if event.value not in self.range(event.var):
            raise SCMError(f"value {event.value} outside range of {event.var}")


def evaluate(model: CausalModel, context: Mapping[str, int]) -> dict:
    """Endogenous values determined by ``context``, in declaration order."""
    model.check_context(context)
    values = dict(context)
    for name in model.order:
        v = ex.evaluate(model.equations[name], values)
        if v not in model.range(name):
            raise SCMError(f"equation for {name} produced {v}, outside range {model.range(name)}")
        values[name] = v
    return {name: values[name] for name in model.endogenous}


def intervene(model: CausalModel, interventions: Iterable[tuple]) -> CausalModel:
    """``M_{Y <- y}``: a copy of ``model`` whose intervened equations are constants."""
    interventions = list(interventions)
    seen = set()
    equations = dict(model.equations)
    for name, value in interventions:
        if name not in model:
            raise SCMError(f"unknown variable {name}")
        if model[name].kind != ENDO:
            raise SCMError(f"cannot intervene on exogenous variable {name}")
        if name in seen:
            raise SCMError(f"variable {name} intervened twice")
        if value not in model.range(name):
            raise SCMError(f"illegal value {name}={value}")
        seen.add(name)
        equations[name] = ex.Const(value)
    return CausalModel(model.variables, equations)


def satisfies(model: CausalModel, context: Mapping[str, int], cf: Union[CausalFormula, Formula]) -> bool:
    """``(M, u) |= [Y <- y] phi``."""
    if not isinstance(cf, CausalFormula):
        cf = CausalFormula((), cf)
    for e in formula_events(cf.body):
        model.check_event(e)
    target = intervene(model, cf.interventions) if cf.interventions else model
    return holds(cf.body, evaluate(target, context))


def contexts(model: CausalModel):
    """Every context of ``model``, in lexicographic order of exogenous ranges."""
    from itertools import product

    ranges = [model.range(u) for u in model.exogenous]
    for combo in product(*ranges):
        yield dict(zip(model.exogenous, combo))
