"""Minimal arithmetic expression parser for config-defined fields.

Supports ``+ - * / ^`` (power is right-associative), unary minus, parentheses,
the functions sin, cos, exp, log, the constants pi and e, and the coordinate
names x1..xd.  Deliberately no eval(), no attribute access, no comparisons:
configs stay data.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ConfigError

__all__ = ["compile_expression"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise ConfigError(
                f"expressions: unexpected character {text[pos:pos + 1]!r} at position {pos}"
            )
        pos = match.end()
        if match.lastgroup == "num":
            out.append(("num", float(match.group("num"))))
        elif match.lastgroup == "name":
            out.append(("name", match.group("name")))
        else:
            out.append(("op", match.group("op")))
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens, variables):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ConfigError(f"expressions: expected {kind}, found {tok[1]!r}")
        if value is not None and tok[1] != value:
            raise ConfigError(f"expressions: expected {value!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise ConfigError(f"expressions: trailing input from {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = (lambda a, b: (lambda env: a(env) + b(env)))(node, rhs) if op == "+" \
                else (lambda a, b: (lambda env: a(env) - b(env)))(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.factor()
            node = (lambda a, b: (lambda env: a(env) * b(env)))(node, rhs) if op == "*" \
                else (lambda a, b: (lambda env: a(env) / b(env)))(node, rhs)
        return node

    def factor(self):
        # unary minus binds looser than the power operator: -2^2 == -(2^2)
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.factor()
            return lambda env: -inner(env)
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            rhs = self.factor()  # right-associative, sign allowed in exponent
            return (lambda a, b: (lambda env: a(env) ** b(env)))(node, rhs)
        return node

    def atom(self):
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return lambda env, v=value: v
        if kind == "name":
            self.take()
            if self.peek() == ("op", "("):
                fn = _FUNCTIONS.get(value)
                if fn is None:
                    raise ConfigError(f"expressions: unknown function {value!r}")
                self.take("op", "(")
                inner = self.expr()
                self.take("op", ")")
                return lambda env, f=fn: f(inner(env))
            if value in _CONSTANTS:
                return lambda env, v=_CONSTANTS[value]: v
            if value in self.variables:
                return lambda env, name=value: env[name]
            raise ConfigError(f"expressions: unknown name {value!r}")
        if (kind, value) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise ConfigError(f"expressions: unexpected token {value!r}")


def compile_expression(text, n_vars):
    """Compile an expression over x1..x{n_vars} into a vectorized callable.

    The result takes a sequence of coordinate arrays and evaluates with numpy
    broadcasting; a constant expression broadcasts to the coordinates' shape.
    """
    variables = {f"x{i + 1}" for i in range(n_vars)}
    node = _Parser(_tokenize(text), variables).parse()

    def evaluate(coords):
        if len(coords) != n_vars:
            raise ConfigError(
                f"expressions: expected {n_vars} coordinate arrays, got {len(coords)}"
            )
        env = {f"x{i + 1}": np.asarray(c) for i, c in enumerate(coords)}
        value = node(env)
        shape = np.broadcast_shapes(*(c.shape for c in env.values()))
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    return evaluate
