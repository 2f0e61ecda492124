"""Integer expression trees used as structural-equation bodies.

Expressions are immutable and evaluate over integer variable values. Boolean
results (comparisons, ``and``/``or``/``not``, ``indicator``) are encoded as 0/1.
Every expression can also be lowered to a flat postfix program that the batch
kernels in :mod:`moralrl.kernel` execute.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

# opcodes for the postfix programs; each instruction is an (opcode, arg) pair
OP_CONST = 0
OP_LOAD = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_EQ = 5
OP_NE = 6
OP_LT = 7
OP_LE = 8
OP_GT = 9
OP_GE = 10
OP_AND = 11
OP_OR = 12
OP_NOT = 13
OP_NEG = 14
OP_MAX = 15
OP_MIN = 16
OP_IND = 17
OP_IF = 18

BINARY_OPS = {
    "+": OP_ADD,
    "-": OP_SUB,
    "*": OP_MUL,
    "==": OP_EQ,
    "!=": OP_NE,
    "<": OP_LT,
    "<=": OP_LE,
    ">": OP_GT,
    ">=": OP_GE,
    "and": OP_AND,
    "or": OP_OR,
}

# lower binds tighter; mirrors C
PRECEDENCE = {
    "or": 1,
    "and": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6,
}

FUNCTIONS = {"max": 2, "min": 2, "indicator": 1, "if": 3}


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "not" or "-"
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Const, Var, BinOp, UnaryOp, Call]


def variables(expr: Expr) -> list[str]:
    """Names referenced by ``expr``, in first-occurrence order."""
    seen: dict[str, None] = {}

    def walk(e):
        if isinstance(e, Var):
            seen.setdefault(e.name)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, UnaryOp):
            walk(e.operand)
        elif isinstance(e, Call):
            for arg in e.args:
                walk(arg)

    walk(expr)
    return list(seen)


def _binop(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "and":
        return int(bool(a) and bool(b))
    if op == "or":
        return int(bool(a) or bool(b))
    raise ValueError(f"unknown operator {op!r}")


def evaluate(expr: Expr, values: Mapping[str, int]) -> int:
    """Evaluate ``expr`` with variable values taken from ``values``."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return values[expr.name]
    if isinstance(expr, BinOp):
        return _binop(expr.op, evaluate(expr.left, values), evaluate(expr.right, values))
    if isinstance(expr, UnaryOp):
        v = evaluate(expr.operand, values)
        return int(not v) if expr.op == "not" else -v
    if isinstance(expr, Call):
        if expr.func == "if":
            cond, a, b = expr.args
            return evaluate(a, values) if evaluate(cond, values) else evaluate(b, values)
        args = [evaluate(a, values) for a in expr.args]
        if expr.func == "max":
            return max(args)
        if expr.func == "min":
            return min(args)
        if expr.func == "indicator":
            return int(args[0] != 0)
    raise TypeError(f"not an expression: {expr!r}")


def to_source(expr: Expr, parent_prec: int = 0) -> str:
    """Render ``expr`` in DSL syntax, parenthesizing only where needed."""
    if isinstance(expr, Const):
        return str(expr.value) if expr.value >= 0 else f"({expr.value})"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, UnaryOp):
        inner = to_source(expr.operand, 7)
        return f"not {inner}" if expr.op == "not" else f"-{inner}"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(to_source(a) for a in expr.args)})"
    if isinstance(expr, BinOp):
        prec = PRECEDENCE[expr.op]
        # left-associative: the right operand needs parens at equal precedence
        text = f"{to_source(expr.left, prec)} {expr.op} {to_source(expr.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {expr!r}")


def compile_program(expr: Expr, index: Mapping[str, int]) -> tuple[np.ndarray, int]:
    """Lower ``expr`` to a postfix program.

    Returns an ``(n, 2)`` int64 array of ``(opcode, arg)`` instructions and the
    maximum stack depth the program needs.
    """
    code: list[tuple[int, int]] = []
    depth = 0
    max_depth = 0

    def push(op, arg=0, delta=0):
        nonlocal depth, max_depth
        code.append((op, arg))
        depth += delta
        max_depth = max(max_depth, depth)

    def emit(e):
        if isinstance(e, Const):
            push(OP_CONST, e.value, 1)
        elif isinstance(e, Var):
            push(OP_LOAD, index[e.name], 1)
        elif isinstance(e, BinOp):
            emit(e.left)
            emit(e.right)
            push(BINARY_OPS[e.op], 0, -1)
        elif isinstance(e, UnaryOp):
            emit(e.operand)
            push(OP_NOT if e.op == "not" else OP_NEG)
        elif isinstance(e, Call):
            for arg in e.args:
                emit(arg)
            if e.func == "max":
                push(OP_MAX, 0, -1)
            elif e.func == "min":
                push(OP_MIN, 0, -1)
            elif e.func == "indicator":
                push(OP_IND)
            elif e.func == "if":
                push(OP_IF, 0, -2)
            else:
                raise ValueError(f"unknown function {e.func!r}")
        else:
            raise TypeError(f"not an expression: {e!r}")

    emit(expr)
    return np.asarray(code, dtype=np.int64).reshape(-1, 2), max_depth
