import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from moralrl import expr as ex
from moralrl import kernel
from moralrl.blame import BlameTracker, EstimatorConfig, EventEstimator
from moralrl.dsl import _Parser
from moralrl.kernel import CompiledModel
from moralrl.dsl import parse_model

NAMES = ("x", "y", "z")

leaves = st.one_of(st.builds(ex.Const, st.integers(-5, 5)), st.sampled_from(NAMES).map(ex.Var))


def _extend(children):
    binary = st.builds(ex.BinOp, st.sampled_from(sorted(ex.BINARY_OPS)), children, children)
    unary = st.builds(ex.UnaryOp, st.sampled_from(["not", "-"]), children)
    calls = st.one_of(
        st.builds(lambda a, b: ex.Call("max", (a, b)), children, children),
        st.builds(lambda a, b: ex.Call("min", (a, b)), children, children),
        st.builds(lambda a: ex.Call("indicator", (a,)), children),
        st.builds(lambda a, b, c: ex.Call("if", (a, b, c)), children, children, children),
    )
    return st.one_of(binary, unary, calls)


exprs = st.recursive(leaves, _extend, max_leaves=12)
envs = st.fixed_dictionaries({n: st.integers(-3, 3) for n in NAMES})


def reparse(text):
    p = _Parser(text)
    e = p.expression()
    assert p.tok.kind == "EOF"
    return e


@settings(max_examples=300, deadline=None)
@given(exprs, envs)
def test_source_round_trip_preserves_value(e, env):
    assert ex.evaluate(reparse(ex.to_source(e)), env) == ex.evaluate(e, env)


@settings(max_examples=200, deadline=None)
@given(exprs, st.lists(envs, min_size=1, max_size=8))
def test_compiled_program_matches_tree_walk(e, rows):
    index = {n: i for i, n in enumerate(NAMES)}
    code, depth = ex.compile_program(e, index)
    values = np.array([[r[n] for n in NAMES] for r in rows], dtype=np.int64)
    expect = [ex.evaluate(e, r) for r in rows]
    for impl in kernel.backends().values():
        assert impl.run_rows(code, values, depth).tolist() == expect


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=6),
       st.integers(0, 2), st.integers(0, 1))
def test_backends_agree_on_camping_interventions(settings_, ua, up):
    model = parse_model("exo U_A in {0,1,2}; exo U_P in {0,1}; endo A in {0,1,2}; endo P in {0,1};"
                        "endo F in {0,1}; A := U_A; P := U_P; F := max(indicator(A == 2), P);")
    n = 5
    mask = np.zeros((len(settings_), n), dtype=np.uint8)
    forced = np.zeros((len(settings_), n), dtype=np.int64)
    for r, (var, val) in enumerate(settings_):
        col = 2 + var
        mask[r, col] = 1
        forced[r, col] = val if var == 0 else min(val, 1)
    outs = [CompiledModel(model, impl).evaluate_rows({"U_A": ua, "U_P": up}, mask, forced).tolist()
            for impl in kernel.backends().values()]
    assert all(o == outs[0] for o in outs)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1), st.booleans()), min_size=1, max_size=60),
       st.floats(-2, 2))
def test_blame_bounded_and_t_plus_recursion(trajectory, eta):
    est = EventEstimator("E", EstimatorConfig(alpha=0.3, eta=eta))
    tr = BlameTracker("E")
    prev = None
    for t, (s, a, occ) in enumerate(trajectory):
        tr.update_t_plus(est, s, (0, 1), step=t)
        if prev is not None:
            assert tr.t_plus >= prev - 1.0 - 1e-12
        prev = tr.t_plus
        b = tr.blame(est, s, a)
        assert 0.0 <= b <= 1.0 and not math.isnan(b)
        est.update(s, a, occ, s, a, terminal=occ)
        m1, m2 = est.moments(s, a)
        assert m1 >= 0 and m2 >= 0
