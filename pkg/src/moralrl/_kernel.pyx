# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch evaluation of SCM programs, row by row."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    MAX_STACK = 256

# keep in sync with moralrl.expr
cdef enum:
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


cdef inline long long _run(const long long* code, Py_ssize_t start, Py_ssize_t end,
                           const long long* vals, long long* stack) noexcept nogil:
    cdef Py_ssize_t k
    cdef int sp = 0
    cdef int op
    cdef long long a, b, c
    for k in range(start, end):
        op = <int>code[2 * k]
        if op == OP_CONST:
            stack[sp] = code[2 * k + 1]
            sp += 1
        elif op == OP_LOAD:
            stack[sp] = vals[code[2 * k + 1]]
            sp += 1
        elif op == OP_NOT:
            stack[sp - 1] = 1 if stack[sp - 1] == 0 else 0
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_IND:
            stack[sp - 1] = 1 if stack[sp - 1] != 0 else 0
        elif op == OP_IF:
            c = stack[sp - 3]
            a = stack[sp - 2]
            b = stack[sp - 1]
            sp -= 2
            stack[sp - 1] = a if c != 0 else b
        else:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == OP_ADD:
                a = a + b
            elif op == OP_SUB:
                a = a - b
            elif op == OP_MUL:
                a = a * b
            elif op == OP_EQ:
                a = a == b
            elif op == OP_NE:
                a = a != b
            elif op == OP_LT:
                a = a < b
            elif op == OP_LE:
                a = a <= b
            elif op == OP_GT:
                a = a > b
            elif op == OP_GE:
                a = a >= b
            elif op == OP_AND:
                a = (a != 0) and (b != 0)
            elif op == OP_OR:
                a = (a != 0) or (b != 0)
            elif op == OP_MAX:
                a = a if a > b else b
            elif op == OP_MIN:
                a = a if a < b else b
            stack[sp - 1] = a
    return stack[0]


def evaluate_rows(code, starts, ends, order, base, mask, forced, int stack_size):
    if stack_size > MAX_STACK:
        raise ValueError(f"expression needs stack depth {stack_size} > {MAX_STACK}")
    cdef const long long[:, ::1] c_code = np.ascontiguousarray(code, dtype=np.int64)
    cdef const long long[::1] c_starts = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const long long[::1] c_ends = np.ascontiguousarray(ends, dtype=np.int64)
    cdef const long long[::1] c_order = np.ascontiguousarray(order, dtype=np.int64)
    cdef const cnp.uint8_t[:, ::1] c_mask = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef const long long[:, ::1] c_forced = np.ascontiguousarray(forced, dtype=np.int64)
    cdef Py_ssize_t rows = c_mask.shape[0]
    out_arr = np.tile(np.asarray(base, dtype=np.int64), (rows, 1))
    cdef long long[:, ::1] out = out_arr
    cdef long long stack[MAX_STACK]
    cdef Py_ssize_t r, k, j
    cdef const long long* cp = &c_code[0, 0] if c_code.shape[0] else NULL
    with nogil:
        for r in range(rows):
            for k in range(c_order.shape[0]):
                j = c_order[k]
                if c_mask[r, j]:
                    out[r, j] = c_forced[r, j]
                else:
                    out[r, j] = _run(cp, c_starts[k], c_ends[k], &out[r, 0], stack)
    return out_arr


def run_rows(code, values, int stack_size):
    if stack_size > MAX_STACK:
        raise ValueError(f"expression needs stack depth {stack_size} > {MAX_STACK}")
    cdef const long long[:, ::1] c_code = np.ascontiguousarray(code, dtype=np.int64)
    cdef long long[:, ::1] vals = np.array(values, dtype=np.int64, order="C")
    cdef Py_ssize_t rows = vals.shape[0]
    result = np.empty(rows, dtype=np.int64)
    cdef long long[::1] res = result
    cdef long long stack[MAX_STACK]
    cdef Py_ssize_t r
    cdef Py_ssize_t n = c_code.shape[0]
    cdef const long long* cp = &c_code[0, 0] if n else NULL
    if rows == 0 or n == 0:
        return result
    with nogil:
        for r in range(rows):
            res[r] = _run(cp, 0, n, &vals[r, 0], stack)
    return result
