import numpy as np
import pytest

from moralrl import expr as ex
from moralrl.dsl import parse_model
from moralrl.scm import (
    And, CausalFormula, CausalModel, CycleError, Not, Or, PrimitiveEvent, SCMError, Variable,
    contexts, evaluate, holds, intervene, satisfies,
)
from randmodels import all_contexts, random_model, table_eval


def test_camping_evaluation_all_contexts(camping):
    # F is fire from unsafe camping or the pyromaniac
    for u in contexts(camping):
        v = evaluate(camping, u)
        assert v["A"] == u["U_A"] and v["C"] == u["U_A"] and v["P"] == u["U_P"]
        assert v["F"] == int(u["U_A"] == 2 or u["U_P"] == 1)


def test_contexts_count(camping):
    assert len(list(contexts(camping))) == 6


def test_brute_force_oracle_random_models():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m = random_model(rng)
        model = parse_model(m.source())
        assert model.endogenous == tuple(m.decl_order)
        for u in all_contexts(m):
            assert evaluate(model, u) == table_eval(m, u)
            k = int(rng.integers(0, 3))
            names = rng.choice(m.endo, size=k, replace=False).tolist()
            setting = {n: int(rng.integers(0, 2)) for n in names}
            assert evaluate(intervene(model, setting.items()), u) == table_eval(m, u, setting)


def test_intervention_replaces_equation(camping):
    u = {"U_A": 2, "U_P": 0}
    assert evaluate(camping, u)["F"] == 1
    assert evaluate(intervene(camping, [("A", 0)]), u)["F"] == 0
    # the original model is untouched
    assert evaluate(camping, u)["F"] == 1


@pytest.mark.parametrize("bad", [[("U_A", 1)], [("A", 5)], [("A", 0), ("A", 1)], [("Q", 0)]])
def test_intervention_errors(camping, bad):
    with pytest.raises(SCMError):
        intervene(camping, bad)


def test_satisfies_causal_formula(camping):
    u = {"U_A": 2, "U_P": 1}
    F1 = PrimitiveEvent("F", 1)
    assert satisfies(camping, u, F1)
    assert satisfies(camping, u, CausalFormula((("A", 0),), F1))
    assert not satisfies(camping, u, CausalFormula((("A", 0), ("P", 0)), F1))
    assert satisfies(camping, u, CausalFormula((("A", 0), ("P", 0)), Not(F1)))


def test_formula_connectives():
    vals = {"X": 1, "Y": 0}
    x, y = PrimitiveEvent("X", 1), PrimitiveEvent("Y", 1)
    assert holds(Or((x, y)), vals) and not holds(And((x, y)), vals)
    assert holds(Not(y), vals)


def test_validation_errors():
    u = Variable("U", "exo", (0, 1))
    x = Variable("X", "endo", (0, 1))
    y = Variable("Y", "endo", (0, 1))
    with pytest.raises(SCMError):
        CausalModel([u, x], {})  # missing equation
    with pytest.raises(SCMError):
        CausalModel([u, x], {"X": ex.Var("Z")})  # undeclared
    with pytest.raises(SCMError):
        CausalModel([u, x], {"X": ex.Var("U"), "U": ex.Const(0)})  # equation for exogenous
    with pytest.raises(SCMError):
        CausalModel([u, x, x], {"X": ex.Var("U")})
    with pytest.raises(CycleError):
        CausalModel([u, x, y], {"X": ex.Var("Y"), "Y": ex.Var("X")})
    with pytest.raises(SCMError):
        Variable("X", "endo", ())


def test_evaluation_range_violation():
    m = CausalModel(
        [Variable("U", "exo", (0, 1)), Variable("X", "endo", (0, 1))],
        {"X": ex.BinOp("+", ex.Var("U"), ex.Const(1))},
    )
    assert evaluate(m, {"U": 0}) == {"X": 1}
    with pytest.raises(SCMError):
        evaluate(m, {"U": 1})


def test_context_validation(camping):
    with pytest.raises(SCMError):
        evaluate(camping, {"U_A": 2})
    with pytest.raises(SCMError):
        evaluate(camping, {"U_A": 7, "U_P": 0})


def test_topological_order_independent_of_declaration():
    m = parse_model("exo U in {0,1}; endo Y in {0,1}; endo X in {0,1}; Y := X; X := U;")
    assert m.order == ("X", "Y")
    assert m.endogenous == ("Y", "X")
    assert evaluate(m, {"U": 1}) == {"Y": 1, "X": 1}
