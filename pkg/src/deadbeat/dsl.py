"""Small expression language for defining system dynamics.

Grammar (EBNF):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? atom ('^' integer)?
    atom   := number | ident | func '(' expr (',' expr)? ')' | '(' expr ')'
    ident  := 'x'digit+ | 'u'digit+

Functions: sin, cos, tanh, exp, abs (one argument), min, max (two arguments).
Exponents are integers so that evaluation stays total on boxes containing
negative values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

UNARY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
    "abs": np.abs,
}
BINARY_FUNCS = {
    "min": np.minimum,
    "max": np.maximum,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
  | (?P<ws>[ \t]+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | op | eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
            if m.lastgroup != "ws":
                tokens.append(Token(m.lastgroup, m.group(), lineno, pos + 1))
            pos = m.end()
    last_line = text.count("\n") + 1
    tokens.append(Token("eof", "", last_line, len(text.split("\n")[-1]) + 1))
    return tokens


# AST nodes. All immutable; evaluation broadcasts over leading axes so the
# same tree serves single points and batches.

class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    kind: str  # 'x' or 'u'
    index: int  # 1-based


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple


class _Parser:
    def __init__(self, tokens: list[Token], n: int | None, m: int | None):
        self.tokens = tokens
        self.pos = 0
        self.n = n
        self.m = m

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r} after expression", tok.line, tok.column)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        negated = False
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            negated = True
        node = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            node = Power(node, self.integer())
        if negated:
            node = Neg(node)
        return node

    def integer(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok.kind != "number" or not re.fullmatch(r"\d+", tok.text):
            raise ParseError("exponent must be an integer", tok.line, tok.column)
        self.advance()
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.advance()
            if tok.text in UNARY_FUNCS or tok.text in BINARY_FUNCS:
                return self.call(tok)
            return self.variable(tok)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.line, tok.column)

    def call(self, tok: Token) -> Expr:
        self.expect("(")
        args = [self.expr()]
        if self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        wanted = 1 if tok.text in UNARY_FUNCS else 2
        if len(args) != wanted:
            raise ParseError(f"{tok.text} takes {wanted} argument(s), got {len(args)}",
                             tok.line, tok.column)
        return Call(tok.text, tuple(args))

    def variable(self, tok: Token) -> Expr:
        m = re.fullmatch(r"([xu])(\d+)", tok.text)
        if m is None:
            raise ParseError(f"unknown name {tok.text!r}", tok.line, tok.column)
        kind, index = m.group(1), int(m.group(2))
        if index < 1:
            raise ParseError(f"variable indices start at 1: {tok.text!r}", tok.line, tok.column)
        limit = self.n if kind == "x" else self.m
        if limit is not None and index > limit:
            raise ParseError(
                f"{tok.text!r} exceeds declared dimension ({kind} has {limit} component(s))",
                tok.line, tok.column)
        return Var(kind, index)


def parse_expression(text: str, n: int | None = None, m: int | None = None) -> Expr:
    """Parse one expression; when n/m are given, variable references are range-checked."""
    return _Parser(tokenize(text), n, m).parse()


def evaluate(node: Expr, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Evaluate a tree at x, u with shapes (..., n) and (..., m).

    Returns an array of the leading (batch) shape. Non-finite values are the
    caller's concern; this function never raises on overflow or division by
    zero.
    """
    if isinstance(node, Const):
        return np.broadcast_to(np.float64(node.value), x.shape[:-1]).copy()
    if isinstance(node, Var):
        source = x if node.kind == "x" else u
        return np.asarray(source[..., node.index - 1], dtype=np.float64)
    if isinstance(node, Neg):
        return -evaluate(node.operand, x, u)
    if isinstance(node, BinOp):
        left = evaluate(node.left, x, u)
        right = evaluate(node.right, x, u)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return np.divide(left, right)
    if isinstance(node, Power):
        return evaluate(node.base, x, u) ** node.exponent
    if isinstance(node, Call):
        args = [evaluate(a, x, u) for a in node.args]
        func = UNARY_FUNCS.get(node.func) or BINARY_FUNCS[node.func]
        return func(*args)
    raise TypeError(f"not an expression node: {node!r}")
