"""Text format for structural causal models and causal-formula queries.

Model files (``.scm``) are line oriented::

    # comment
    exo U_A in {0, 1, 2};
    endo A in {0, 1, 2};
    A := U_A;
    F := max(indicator(A == 2), P);

Expressions use C-like precedence: ``*`` over ``+ -`` over comparisons
(``< <= > >=``) over equality (``== !=``) over ``and`` over ``or``. ``not x``,
``-x``, ``max(a, b)``, ``min(a, b)``, ``indicator(c)`` and ``if(c, a, b)`` are
also available. ``&&``, ``||`` and ``!`` are accepted as spellings of
``and``, ``or`` and ``not``.

Queries look like ``[P <- 0](F = 0)`` or ``F = 1 & !(A = 2)``; contexts are
written ``U_A=2,U_P=1``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Optional

from . import expr as ex
from .scm import (
    ENDO,
    EXO,
    And,
    CausalFormula,
    CausalModel,
    Not,
    Or,
    PrimitiveEvent,
    SCMError,
    Variable,
)

# parents-combination count above which the static range check is skipped
RANGE_CHECK_LIMIT = 100_000


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, INT, OP, EOF
    text: str
    line: int
    col: int

    @property
    def end_col(self):
        return self.col + max(len(self.text), 1)


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)|(?P<comment>\#[^\n]*)|(?P<nl>\n)"
    r"|(?P<INT>\d+)|(?P<NAME>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<OP>:=|<-|==|!=|<=|>=|&&|\|\||[-+*<>=!&|(){}\[\],;])"
)


class _Fail(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def _diag_at(tok: Token, message: str) -> Diagnostic:
    return Diagnostic("error", message, tok.line, tok.col, tok.line, tok.end_col)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise _Fail(Diagnostic("error", f"unexpected character {text[pos]!r}", line, col, line, col + 1))
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("INT", "NAME", "OP"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        # (name, token) for every variable reference, for later resolution
        self.refs: list[tuple[str, Token]] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("OP", "NAME") and t.text in texts

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise _Fail(_diag_at(self.tok, f"expected {text!r}, found {found!r}"))
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise _Fail(_diag_at(self.tok, f"expected {what}, found {found!r}"))
        return self.advance()

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        v = int(self.expect_kind("INT", "integer").text)
        return -v if neg else v

    # expressions -------------------------------------------------------

    _ALIASES = {"&&": "and", "||": "or"}

    def _binary_op(self) -> Optional[str]:
        t = self.tok
        if t.kind not in ("OP", "NAME"):
            return None
        op = self._ALIASES.get(t.text, t.text)
        return op if op in ex.PRECEDENCE else None

    def expression(self, min_prec: int = 1) -> ex.Expr:
        left = self.unary()
        while True:
            op = self._binary_op()
            if op is None or ex.PRECEDENCE[op] < min_prec:
                return left
            self.advance()
            right = self.expression(ex.PRECEDENCE[op] + 1)
            left = ex.BinOp(op, left, right)

    def unary(self) -> ex.Expr:
        if self.at("not", "!"):
            self.advance()
            return ex.UnaryOp("not", self.unary())
        if self.at("-"):
            self.advance()
            operand = self.unary()
            if isinstance(operand, ex.Const):
                return ex.Const(-operand.value)
            return ex.UnaryOp("-", operand)
        return self.primary()

    def primary(self) -> ex.Expr:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return ex.Const(int(t.text))
        if self.at("("):
            self.advance()
            e = self.expression()
            self.expect(")")
            return e
        if t.kind == "NAME" and t.text not in ("and", "or", "not", "in", "exo", "endo"):
            self.advance()
            if self.at("("):
                if t.text not in ex.FUNCTIONS:
                    raise _Fail(_diag_at(t, f"unknown function {t.text!r}"))
                self.advance()
                args = [self.expression()]
                while self.at(","):
                    self.advance()
                    args.append(self.expression())
                self.expect(")")
                arity = ex.FUNCTIONS[t.text]
                if len(args) != arity:
                    raise _Fail(_diag_at(t, f"{t.text} takes {arity} argument(s), got {len(args)}"))
                return ex.Call(t.text, tuple(args))
            if t.text in ex.FUNCTIONS:
                raise _Fail(_diag_at(t, f"{t.text} is a function and needs arguments"))
            self.refs.append((t.text, t))
            return ex.Var(t.text)
        found = t.text or "end of input"
        raise _Fail(_diag_at(t, f"expected an expression, found {found!r}"))

    # formulas ----------------------------------------------------------

    def causal_formula(self):
        interventions = []
        if self.at("["):
            self.advance()
            if not self.at("]"):
                while True:
                    name = self.expect_kind("NAME", "variable name")
                    self.expect("<-")
                    value_tok = self.tok
                    interventions.append((name, value_tok, self.integer()))
                    if not self.at(","):
                        break
                    self.advance()
            self.expect("]")
        body = self.formula()
        return interventions, body

    def formula(self):
        parts = [self.formula_and()]
        while self.at("|", "||", "or"):
            self.advance()
            parts.append(self.formula_and())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def formula_and(self):
        parts = [self.formula_unary()]
        while self.at("&", "&&", "and"):
            self.advance()
            parts.append(self.formula_unary())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def formula_unary(self):
        if self.at("!", "not"):
            self.advance()
            return ("not", self.formula_unary())
        if self.at("("):
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        name = self.expect_kind("NAME", "variable name")
        if not self.at("=", "=="):
            raise _Fail(_diag_at(self.tok, f"expected '=' after {name.text}"))
        self.advance()
        value_tok = self.tok
        return ("event", name, value_tok, self.integer())


def _cycle_members(parents: dict[str, tuple]) -> list[str]:
    pending = {x: {p for p in ps if p in parents} for x, ps in parents.items()}
    changed = True
    while changed:
        changed = False
        for x in [x for x, deps in pending.items() if not deps]:
            del pending[x]
            for deps in pending.values():
                deps.discard(x)
            changed = True
    return list(pending)


def parse_model(text: str) -> CausalModel:
    """Parse ``.scm`` text into a validated :class:`CausalModel`.

    Raises:
        ParseError: carrying one or more located diagnostics.
    """
    try:
        return _parse_model(text)
    except ParseError:
        raise
    except _Fail as f:
        raise ParseError([f.diag]) from None
    except Exception as err:  # parser must never crash the caller
        raise ParseError([Diagnostic("error", f"internal parser error: {err}", 1, 1, 1, 1)]) from None


def _parse_model(text: str) -> CausalModel:
    p = _Parser(text.replace("\r\n", "\n"))
    decls: dict[str, tuple[Variable, Token]] = {}
    equations: dict[str, tuple[ex.Expr, Token, list]] = {}
    diags: list[Diagnostic] = []
    while p.tok.kind != "EOF":
        if p.at("exo", "endo"):
            kind_tok = p.advance()
            name = p.expect_kind("NAME", "variable name")
            p.expect("in")
            p.expect("{")
            values = [p.integer()]
            while p.at(","):
                p.advance()
                values.append(p.integer())
            p.expect("}")
            p.expect(";")
            if name.text in decls:
                diags.append(_diag_at(name, f"duplicate variable {name.text}"))
                continue
            if len(set(values)) != len(values):
                diags.append(_diag_at(name, f"duplicate values in range of {name.text}"))
                continue
            kind = EXO if kind_tok.text == "exo" else ENDO
            decls[name.text] = (Variable(name.text, kind, tuple(values)), name)
        elif p.tok.kind == "NAME":
            target = p.advance()
            p.expect(":=")
            start = len(p.refs)
            body = p.expression()
            p.expect(";")
            if target.text in equations:
                diags.append(_diag_at(target, f"second equation for {target.text}"))
                continue
            equations[target.text] = (body, target, p.refs[start:])
        else:
            found = p.tok.text
            raise _Fail(_diag_at(p.tok, f"expected a declaration or equation, found {found!r}"))

    for name, (body, tok, refs) in equations.items():
        if name not in decls:
            diags.append(_diag_at(tok, f"equation for undeclared variable {name}"))
        elif decls[name][0].kind == EXO:
            diags.append(_diag_at(tok, f"equation given for exogenous variable {name}"))
        for ref, rtok in refs:
            if ref not in decls:
                diags.append(_diag_at(rtok, f"undeclared variable {ref}"))
    for name, (var, tok) in decls.items():
        if var.kind == ENDO and name not in equations:
            diags.append(_diag_at(tok, f"endogenous variable {name} has no equation"))
    if diags:
        raise ParseError(diags)

    parents = {n: tuple(ex.variables(b)) for n, (b, _, _) in equations.items()}
    cyclic = _cycle_members(parents)
    if cyclic:
        raise ParseError(
            [_diag_at(equations[n][1], f"cyclic dependency involving {n}") for n in cyclic]
        )

    variables = [v for v, _ in decls.values()]
    ranges = {v.name: v.values for v in variables}
    for name, (body, tok, _) in equations.items():
        bad = _range_violation(body, parents[name], ranges, ranges[name])
        if bad is not None:
            inputs = ", ".join(f"{k}={v}" for k, v in bad[0].items())
            diags.append(
                _diag_at(tok, f"equation for {name} yields {bad[1]} (outside its range) when {inputs}")
            )
    if diags:
        raise ParseError(diags)
    try:
        return CausalModel(variables, {n: b for n, (b, _, _) in equations.items()})
    except SCMError as err:
        raise ParseError([Diagnostic("error", str(err), 1, 1, 1, 1)]) from None


def _range_violation(body, inputs, ranges, target_range):
    size = 1
    for name in inputs:
        size *= len(ranges[name])
    if size > RANGE_CHECK_LIMIT:
        return None
    for combo in product(*(ranges[n] for n in inputs)):
        values = dict(zip(inputs, combo))
        out = ex.evaluate(body, values)
        if out not in target_range:
            return values, out
    return None


def parse_formula(text: str, model: CausalModel) -> CausalFormula:
    """Parse a causal formula such as ``[P <- 0](F = 0)`` against ``model``."""
    try:
        p = _Parser(text)
        interventions, tree = p.causal_formula()
        if p.tok.kind != "EOF":
            raise _Fail(_diag_at(p.tok, f"unexpected {p.tok.text!r} after formula"))
        seen = set()
        resolved = []
        for name_tok, value_tok, value in interventions:
            _check_endogenous(model, name_tok, value_tok, value, "intervene on")
            if name_tok.text in seen:
                raise _Fail(_diag_at(name_tok, f"variable {name_tok.text} intervened twice"))
            seen.add(name_tok.text)
            resolved.append((name_tok.text, value))
        return CausalFormula(tuple(resolved), _build_formula(tree, model))
    except _Fail as f:
        raise ParseError([f.diag]) from None
    except ParseError:
        raise
    except Exception as err:
        raise ParseError([Diagnostic("error", f"internal parser error: {err}", 1, 1, 1, 1)]) from None


def _check_endogenous(model, name_tok, value_tok, value, verb):
    name = name_tok.text
    if name not in model:
        raise _Fail(_diag_at(name_tok, f"unknown variable {name}"))
    if model[name].kind != ENDO:
        raise _Fail(_diag_at(name_tok, f"cannot {verb} exogenous variable {name}"))
    if value not in model.range(name):
        raise _Fail(_diag_at(value_tok, f"illegal value {value} for {name}; range is {list(model.range(name))}"))


def _build_formula(tree, model):
    tag = tree[0]
    if tag == "event":
        _, name_tok, value_tok, value = tree
        _check_endogenous(model, name_tok, value_tok, value, "refer to")
        return PrimitiveEvent(name_tok.text, value)
    if tag == "not":
        return Not(_build_formula(tree[1], model))
    parts = tuple(_build_formula(t, model) for t in tree[1])
    return And(parts) if tag == "and" else Or(parts)


def parse_context(text: str, model: CausalModel) -> dict:
    """Parse ``U_A=2,U_P=1`` into a total context for ``model``."""
    try:
        p = _Parser(text)
        context = {}
        while p.tok.kind != "EOF":
            name = p.expect_kind("NAME", "exogenous variable name")
            p.expect("=")
            value_tok = p.tok
            value = p.integer()
            if name.text not in model:
                raise _Fail(_diag_at(name, f"unknown variable {name.text}"))
            if model[name.text].kind != EXO:
                raise _Fail(_diag_at(name, f"{name.text} is endogenous; contexts assign exogenous variables"))
            if value not in model.range(name.text):
                raise _Fail(_diag_at(value_tok, f"illegal value {value} for {name.text}"))
            if name.text in context:
                raise _Fail(_diag_at(name, f"{name.text} assigned twice"))
            context[name.text] = value
            if p.tok.kind != "EOF":
                p.expect(",")
        missing = [u for u in model.exogenous if u not in context]
        if missing:
            end = p.tok
            raise _Fail(_diag_at(end, f"context does not assign {', '.join(missing)}"))
        return context
    except _Fail as f:
        raise ParseError([f.diag]) from None


def serialize_model(model: CausalModel) -> str:
    lines = []
    for v in model.variables:
        values = ", ".join(str(x) for x in v.values)
        lines.append(f"{v.kind} {v.name} in {{{values}}};")
    for name in model.endogenous:
        lines.append(f"{name} := {ex.to_source(model.equations[name])};")
    return "\n".join(lines) + "\n"


def load_model(path) -> CausalModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def bundled_model_path(name: str = "camping") -> Path:
    return Path(__file__).with_name("data") / f"{name}.scm"


def camping_model() -> CausalModel:
    return load_model(bundled_model_path("camping"))
