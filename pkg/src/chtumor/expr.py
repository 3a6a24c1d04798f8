"""Arithmetic expressions over ``x``, ``y`` and ``t``.

Boundary and initial data in scenario files are written as short formulas,
e.g. ``"1 + 0.5*x*sin(t)"``.  This module tokenizes and parses them into a
small expression tree that evaluates vectorised over numpy arrays and can be
differentiated symbolically (used for the time derivative of the nutrient
boundary data).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

VARIABLES = ("x", "y", "t")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


class ExpressionError(ValueError):
    """Raised for malformed expressions or unsupported operations."""


class Expr:
    def evaluate(self, x=0.0, y=0.0, t=0.0):
        return self._eval({"x": x, "y": y, "t": t})

    def _eval(self, env):
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def depends_on(self, var: str) -> bool:
        raise NotImplementedError

    def __call__(self, x=0.0, y=0.0, t=0.0):
        out = self.evaluate(x, y, t)
        shape = np.broadcast(np.asarray(x), np.asarray(y), np.asarray(t)).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy() if shape else float(out)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def _eval(self, env):
        return self.value

    def diff(self, var):
        return Num(0.0)

    def depends_on(self, var):
        return False

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def _eval(self, env):
        return env[self.name]

    def diff(self, var):
        return Num(1.0 if var == self.name else 0.0)

    def depends_on(self, var):
        return var == self.name

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _eval(self, env):
        return -self.arg._eval(env)

    def diff(self, var):
        return _neg(self.arg.diff(var))

    def depends_on(self, var):
        return self.arg.depends_on(var)

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _eval(self, env):
        a = self.left._eval(env)
        b = self.right._eval(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def depends_on(self, var):
        return self.left.depends_on(var) or self.right.depends_on(var)

    def diff(self, var):
        u, v = self.left, self.right
        du, dv = u.diff(var), v.diff(var)
        if self.op == "+":
            return _add(du, dv)
        if self.op == "-":
            return _sub(du, dv)
        if self.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if self.op == "/":
            return _sub(_div(du, v), _div(_mul(u, dv), _mul(v, v)))
        # power
        if v.depends_on(var):
            raise ExpressionError(f"cannot differentiate '{self}': variable exponent")
        return _mul(_mul(v, BinOp("^", u, _sub(v, Num(1.0)))), du)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def _eval(self, env):
        return FUNCTIONS[self.func](self.arg._eval(env))

    def depends_on(self, var):
        return self.arg.depends_on(var)

    def diff(self, var):
        a = self.arg
        da = a.diff(var)
        if isinstance(da, Num) and da.value == 0.0:
            return Num(0.0)
        f = self.func
        if f == "sin":
            outer = Call("cos", a)
        elif f == "cos":
            outer = Neg(Call("sin", a))
        elif f == "exp":
            outer = self
        elif f == "tanh":
            outer = _sub(Num(1.0), _mul(self, self))
        elif f == "sqrt":
            outer = _div(Num(0.5), self)
        else:
            raise ExpressionError(f"cannot differentiate '{f}'")
        return _mul(outer, da)

    def __str__(self):
        return f"{self.func}({self.arg})"


# constant-folding constructors keep derivative trees small
def _is(e, value):
    return isinstance(e, Num) and e.value == value


def _neg(a):
    return Num(-a.value) if isinstance(a, Num) else Neg(a)


def _add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return Num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is(a, 0.0):
        return Num(0.0)
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value=None):
        kind, tok = self.peek()
        if kind is None or (value is not None and tok != value):
            raise ExpressionError(f"expected {value or 'token'} in {self.text!r}")
        self.i += 1
        return kind, tok

    def parse(self) -> Expr:
        if not self.tokens:
            raise ExpressionError("empty expression")
        e = self.expr()
        if self.i != len(self.tokens):
            raise ExpressionError(f"trailing input {self.tokens[self.i][1]!r} in {self.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op = self.take()
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op = self.take()
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()[1]
        if tok == "-":
            self.take()
            return _neg(self.unary())
        if tok == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            # right associative, binds tighter than unary minus on the left
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            return Num(float(tok))
        if kind == "name":
            if self.peek()[1] == "(":
                if tok not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {tok!r}")
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(tok, arg)
            if tok in VARIABLES:
                return Var(tok)
            if tok in CONSTANTS:
                return Num(CONSTANTS[tok])
            raise ExpressionError(f"unknown name {tok!r} in {self.text!r}")
        if tok == "(":
            e = self.expr()
            self.take(")")
            return e
        raise ExpressionError(f"unexpected {tok!r} in {self.text!r}")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    return _Parser(str(text)).parse()


class SpaceTimeFunction:
    """A scalar function of (x, y, t) given by source text.

    Keeps the source string so a resolved configuration can be written back
    verbatim.
    """

    def __init__(self, source: str | float):
        self.source = str(source)
        self.expr = parse(self.source)

    def __call__(self, x, y=0.0, t=0.0):
        return self.expr(x, y, t)

    @property
    def is_constant(self) -> bool:
        return not any(self.expr.depends_on(v) for v in VARIABLES)

    def time_derivative(self) -> "SpaceTimeFunction | None":
        """Symbolic d/dt, or ``None`` when the tree cannot be differentiated."""
        try:
            d = self.expr.diff("t")
        except ExpressionError:
            return None
        out = SpaceTimeFunction.__new__(SpaceTimeFunction)
        out.source = str(d)
        out.expr = d
        return out

    def __repr__(self):
        return f"SpaceTimeFunction({self.source!r})"
