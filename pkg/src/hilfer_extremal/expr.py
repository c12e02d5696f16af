"""A tiny arithmetic language for right-hand sides and impulse maps.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are ``t`` and ``x1`` .. ``xn``; functions are ``sin``, ``cos``,
``exp``, ``abs`` (one argument) and ``min``, ``max`` (two). Evaluation is
vectorized with numpy and pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["ExpressionError", "Expression", "parse_expression"]

_FUNCS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


class ExpressionError(ValueError):
    """Syntax, name or arity error, with the 0-based character ``position``."""

    def __init__(self, message: str, position: int, source: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in {source!r}" if source else ""))
        self.position = position


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str):
    toks = []
    i = 0
    while i < len(src):
        if src[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(src, i)
        if not m or m.end() == i:
            raise ExpressionError(f"unexpected character {src[i]!r}", i, src)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        i = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, text=None):
        tok = self.toks[self.i]
        if text is not None and tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExpressionError(f"expected {text!r}, found {found}", tok.pos, self.src)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", tok.pos, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek().text in ("-", "+"):
            op = self.take().text
            arg = self.unary()
            return ("neg", arg) if op == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            return ("num", float(tok.text))
        if tok.text == "(":
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            if self.peek().text == "(":
                if tok.text not in _FUNCS:
                    raise ExpressionError(f"unknown function {tok.text!r}", tok.pos, self.src)
                self.take("(")
                args = [self.expr()]
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                arity = _FUNCS[tok.text][0]
                if len(args) != arity:
                    raise ExpressionError(
                        f"{tok.text} takes {arity} argument(s), got {len(args)}", tok.pos, self.src
                    )
                return ("call", tok.text, tuple(args))
            if tok.text == "t":
                return ("t",)
            m = re.fullmatch(r"x([1-9]\d*)", tok.text)
            if m and int(m.group(1)) <= self.dim:
                return ("x", int(m.group(1)) - 1)
            if tok.text in _FUNCS:
                raise ExpressionError(f"function {tok.text!r} needs arguments", tok.pos, self.src)
            raise ExpressionError(f"unknown identifier {tok.text!r}", tok.pos, self.src)
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExpressionError(f"unexpected {found}", tok.pos, self.src)


def _eval(node, t, x):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "t":
        return t
    if kind == "x":
        return x[..., node[1]]
    if kind == "neg":
        return -_eval(node[1], t, x)
    if kind == "call":
        fn = _FUNCS[node[1]][1]
        return fn(*(_eval(a, t, x) for a in node[2]))
    op, lhs, rhs = node[1], _eval(node[2], t, x), _eval(node[3], t, x)
    if op == "+":
        return lhs + rhs
    if op == "-":
        return lhs - rhs
    if op == "*":
        return lhs * rhs
    if op == "/":
        if np.any(np.asarray(rhs) == 0):
            raise ZeroDivisionError("division by zero in expression")
        return lhs / rhs
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        return np.power(lhs, rhs)


@dataclass(frozen=True)
class Expression:
    """Parsed expression; equality and hashing use the source text."""

    source: str
    dim: int
    tree: tuple

    def __call__(self, t, x):
        """Evaluate at time(s) ``t`` and state(s) ``x`` (last axis = components).

        Broadcasts: ``t`` of shape (m,) with ``x`` of shape (m, n) gives (m,).
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expression expects {self.dim} components, got {x.shape[-1]}")
        out = _eval(self.tree, np.asarray(t, dtype=float), x)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast_shapes(np.shape(t), x.shape[:-1]))

    def __eq__(self, other):
        return isinstance(other, Expression) and (self.source, self.dim) == (other.source, other.dim)

    def __hash__(self):
        return hash((self.source, self.dim))


def parse_expression(src: str, dim: int) -> Expression:
    """Parse ``src`` over the variables t, x1..x``dim``.

    Raises
    ------
    ExpressionError
        On syntax errors, unknown identifiers or wrong function arity.
    """
    if not isinstance(src, str):
        raise ExpressionError("expression must be a string", 0)
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    return Expression(src, dim, _Parser(src, dim).parse())
