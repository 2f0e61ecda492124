"""Pure-Python (numpy) batch evaluation of compiled SCM programs.

Same interface as the compiled ``_kernel`` extension. Instead of looping over
rows, each instruction is applied to a whole column of rows at once.
"""
import numpy as np

from .expr import (
    OP_ADD, OP_AND, OP_CONST, OP_EQ, OP_GE, OP_GT, OP_IF, OP_IND, OP_LE, OP_LOAD,
    OP_LT, OP_MAX, OP_MIN, OP_MUL, OP_NE, OP_NEG, OP_NOT, OP_OR, OP_SUB,
)

_BINARY = {
    OP_ADD: np.add,
    OP_SUB: np.subtract,
    OP_MUL: np.multiply,
    OP_MAX: np.maximum,
    OP_MIN: np.minimum,
}
_COMPARE = {
    OP_EQ: np.equal,
    OP_NE: np.not_equal,
    OP_LT: np.less,
    OP_LE: np.less_equal,
    OP_GT: np.greater,
    OP_GE: np.greater_equal,
}


def _run(code, start, end, values):
    n = values.shape[0]
    stack = []
    for k in range(start, end):
        op, arg = code[k, 0], code[k, 1]
        if op == OP_CONST:
            stack.append(np.full(n, arg, dtype=np.int64))
        elif op == OP_LOAD:
            stack.append(values[:, arg])
        elif op in _BINARY:
            b = stack.pop()
            stack.append(_BINARY[op](stack.pop(), b))
        elif op in _COMPARE:
            b = stack.pop()
            stack.append(_COMPARE[op](stack.pop(), b).astype(np.int64))
        elif op == OP_AND:
            b = stack.pop()
            stack.append(((stack.pop() != 0) & (b != 0)).astype(np.int64))
        elif op == OP_OR:
            b = stack.pop()
            stack.append(((stack.pop() != 0) | (b != 0)).astype(np.int64))
        elif op == OP_NOT:
            stack.append((stack.pop() == 0).astype(np.int64))
        elif op == OP_NEG:
            stack.append(-stack.pop())
        elif op == OP_IND:
            stack.append((stack.pop() != 0).astype(np.int64))
        elif op == OP_IF:
            b = stack.pop()
            a = stack.pop()
            stack.append(np.where(stack.pop() != 0, a, b))
        else:
            raise ValueError(f"bad opcode {op}")
    return stack.pop()


def evaluate_rows(code, starts, ends, order, base, mask, forced, stack_size):
    """Evaluate every variable for each row of interventions.

    ``mask[r, j]`` set means variable ``j`` is held at ``forced[r, j]`` in row
    ``r``; otherwise its equation (programs ``starts[k]:ends[k]`` for the
    ``k``-th variable of ``order``) is evaluated. Exogenous entries of ``base``
    are copied into every row.
    """
    rows = mask.shape[0]
    out = np.tile(np.asarray(base, dtype=np.int64), (rows, 1))
    for k in range(order.shape[0]):
        j = order[k]
        col = _run(code, starts[k], ends[k], out)
        out[:, j] = np.where(mask[:, j] != 0, forced[:, j], col)
    return out


def run_rows(code, values, stack_size):
    """Run one program against each row of ``values``."""
    return np.asarray(_run(code, 0, code.shape[0], values), dtype=np.int64)
