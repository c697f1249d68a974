"""
Arithmetic expressions over the variables t, x and y.

Grammar (precedence low to high, see docs/expression_grammar.md):

    expr   = term { ("+" | "-") term }
    term   = unary { ("*" | "/") unary }
    unary  = ("-" | "+") unary | power
    power  = atom [ "^" unary ]
    atom   = number | "pi" | "t" | "x" | "y" | function "(" expr ")" | "(" expr ")"

Parsed trees are immutable and evaluate vectorized over numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

VARIABLES = ("t", "x", "y")
CONSTANTS = {"pi": float(np.pi)}
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


class ExpressionSyntaxError(ValueError):
    """Raised for malformed expression text; ``offset`` is the character position."""

    def __init__(self, message: str, text: str, offset: int):
        super().__init__(f"{message} at offset {offset} in {text!r}")
        self.message = message
        self.text = text
        self.offset = offset


class EvaluationError(ValueError):
    """Raised when an expression cannot be evaluated to finite values."""


class Token(NamedTuple):
    kind: str
    value: str
    offset: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


def _checked(value, what: str):
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"non-finite value produced by {what}")
    return value


class Expr:
    """Base class of expression tree nodes."""

    __slots__ = ()

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError

    def _eval(self, env):
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True, slots=True)
class Number(Expr):
    value: float

    def variables(self):
        return frozenset()

    def to_text(self):
        if self.value < 0 or (self.value == 0 and np.signbit(self.value)):
            return f"(-{float(-self.value)!r})"
        return repr(float(self.value))

    def _eval(self, env):
        return np.float64(self.value)


@dataclass(frozen=True, slots=True)
class Constant(Expr):
    name: str

    def variables(self):
        return frozenset()

    def to_text(self):
        return self.name

    def _eval(self, env):
        return np.float64(CONSTANTS[self.name])


@dataclass(frozen=True, slots=True)
class Variable(Expr):
    name: str

    def variables(self):
        return frozenset({self.name})

    def to_text(self):
        return self.name

    def _eval(self, env):
        value = env.get(self.name)
        if value is None:
            raise EvaluationError(f"variable {self.name!r} is not available here")
        return value


@dataclass(frozen=True, slots=True)
class Unary(Expr):
    op: str
    operand: Expr

    def variables(self):
        return self.operand.variables()

    def to_text(self):
        return f"({self.op}{self.operand.to_text()})"

    def _eval(self, env):
        value = self.operand._eval(env)
        return np.negative(value) if self.op == "-" else value


@dataclass(frozen=True, slots=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def variables(self):
        return self.left.variables() | self.right.variables()

    def to_text(self):
        return f"({self.left.to_text()} {self.op} {self.right.to_text()})"

    def _eval(self, env):
        left = self.left._eval(env)
        right = self.right._eval(env)
        if self.op == "+":
            return _checked(np.add(left, right), "'+'")
        if self.op == "-":
            return _checked(np.subtract(left, right), "'-'")
        if self.op == "*":
            return _checked(np.multiply(left, right), "'*'")
        if self.op == "/":
            if np.any(np.asarray(right) == 0.0):
                raise EvaluationError("division by zero")
            return _checked(np.divide(left, right), "'/'")
        return _checked(np.power(left, right), "'^'")


@dataclass(frozen=True, slots=True)
class Call(Expr):
    name: str
    argument: Expr

    def variables(self):
        return self.argument.variables()

    def to_text(self):
        return f"{self.name}({self.argument.to_text()})"

    def _eval(self, env):
        value = self.argument._eval(env)
        if self.name == "sqrt" and np.any(np.asarray(value) < 0.0):
            raise EvaluationError("square root of a negative value")
        return _checked(FUNCTIONS[self.name](value), f"{self.name}()")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def fail(self, message: str, token: Token):
        raise ExpressionSyntaxError(message, self.text, token.offset)

    def expression(self) -> Expr:
        node = self.term()
        while self.peek().value in ("+", "-") and self.peek().kind == "op":
            op = self.advance().value
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek().value in ("*", "/") and self.peek().kind == "op":
            op = self.advance().value
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        token = self.peek()
        if token.kind == "op" and token.value in ("-", "+"):
            self.advance()
            return Unary(token.value, self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        token = self.peek()
        if token.kind == "op" and token.value == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        token = self.advance()
        if token.kind == "number":
            return Number(float(token.value))
        if token.kind == "name":
            if token.value in FUNCTIONS:
                opening = self.advance()
                if opening.value != "(":
                    self.fail(f"expected '(' after function {token.value!r}", opening)
                argument = self.expression()
                self._expect_closing(opening)
                return Call(token.value, argument)
            if token.value in CONSTANTS:
                return Constant(token.value)
            if token.value in VARIABLES:
                return Variable(token.value)
            self.fail(f"unknown identifier {token.value!r}", token)
        if token.kind == "op" and token.value == "(":
            inner = self.expression()
            self._expect_closing(token)
            return inner
        if token.kind == "end":
            self.fail("missing operand", token)
        if token.value == ")":
            self.fail("unbalanced ')'", token)
        self.fail(f"missing operand before {token.value!r}", token)

    def _expect_closing(self, opening: Token):
        token = self.peek()
        if token.kind == "op" and token.value == ")":
            self.advance()
            return
        if token.kind == "end":
            self.fail(f"unbalanced '(' opened at offset {opening.offset}", token)
        self.fail(f"expected ')' but found {token.value!r}", token)


def parse(text: str) -> Expr:
    """Parse expression text into an immutable tree."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", str(text or ""), 0)
    parser = _Parser(text)
    node = parser.expression()
    token = parser.peek()
    if token.kind != "end":
        if token.value == ")":
            parser.fail("unbalanced ')'", token)
        parser.fail(f"unexpected {token.value!r}", token)
    return node


def to_text(expr: Expr) -> str:
    """Fully parenthesized text that parses back to an equal tree value."""
    return expr.to_text()


def evaluate(expr: Expr, t=None, x=None, y=None):
    """
    Evaluate ``expr`` with numpy broadcasting over the supplied coordinates.

    Returns a float when every argument is scalar, otherwise an ndarray.
    """
    env = {}
    scalar = True
    for name, value in (("t", t), ("x", x), ("y", y)):
        if value is None:
            continue
        array = np.asarray(value, dtype=float)
        scalar = scalar and array.ndim == 0
        env[name] = array
    with np.errstate(all="ignore"):
        result = expr._eval(env)
    result = np.asarray(result, dtype=float)
    if not np.all(np.isfinite(result)):
        raise EvaluationError("expression produced a non-finite value")
    if scalar and result.ndim == 0:
        return float(result)
    return result
