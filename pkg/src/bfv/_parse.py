"""Recursive-descent parser for the shared expression grammar.

The grammar is small: rational literals, variable names, ``+ - * / ^`` and
parentheses. ``^`` takes a non-negative integer literal only and ``/`` needs a
constant right-hand side. Braced atoms such as ``e{1,2}`` are delegated to the
caller, which is how the ghost algebra reuses this parser.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Any, Callable, Optional

from .errors import ParseError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(){},]))"
)


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"malformed syntax at position {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class Builder:
    """Hooks the parser calls to build values; subclasses pick the ring."""

    def const(self, value: Fraction) -> Any:
        raise NotImplementedError

    def var(self, name: str) -> Any:
        raise NotImplementedError

    def braced(self, name: str, indices: list[int]) -> Any:
        raise ParseError(f"unexpected braced atom {name}{{...}}")

    def as_constant(self, value: Any) -> Optional[Fraction]:
        raise NotImplementedError


class _Parser:
    def __init__(self, text: str, builder: Builder):
        self.tokens = tokenize(text)
        self.i = 0
        self.b = builder

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}")

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression")
        value = self.expr()
        if self.peek()[0] != "end":
            raise ParseError(f"unexpected trailing token {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                c = self.b.as_constant(rhs)
                if c is None:
                    raise ParseError("division is only allowed by a constant")
                if c == 0:
                    raise ParseError("division by zero")
                value = value * self.b.const(1 / c)
        return value

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind == "op" and val == "-":
                raise ParseError("non-integer exponent: negative exponents are not allowed")
            if kind != "num":
                raise ParseError(f"non-integer exponent: {val!r}")
            if "." in val:
                raise ParseError(f"non-integer exponent: {val!r}")
            base = base ** int(val)
            if self.peek() == ("op", "^"):
                raise ParseError("chained exponents must be parenthesised")
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            if "." in val:
                raise ParseError(f"floating-point literal {val!r}; use p/q")
            return self.b.const(Fraction(int(val)))
        if kind == "name":
            if self.peek() == ("op", "{"):
                self.take()
                indices = []
                while True:
                    k, v = self.take()
                    if k != "num" or "." in v:
                        raise ParseError(f"bad index {v!r} in {val}{{...}}")
                    indices.append(int(v))
                    k, v = self.take()
                    if (k, v) == ("op", "}"):
                        break
                    if (k, v) != ("op", ","):
                        raise ParseError(f"expected ',' or '}}' in {val}{{...}}")
                return self.b.braced(val, indices)
            return self.b.var(val)
        if (kind, val) == ("op", "("):
            value = self.expr()
            self.expect(")")
            return value
        raise ParseError(f"unexpected token {val or 'end of input'!r}")


def parse_with(text: str, builder: Builder):
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    return _Parser(text, builder).parse()


def format_rational(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def join_signed(parts: list[tuple[Fraction, str]], render: Callable[[Fraction, str], str]) -> str:
    """Join ``(coefficient, body)`` pairs as ``a + b - c`` with explicit signs."""
    if not parts:
        return "0"
    out = []
    for idx, (c, body) in enumerate(parts):
        text = render(abs(c), body)
        if idx == 0:
            out.append(("-" if c < 0 else "") + text)
        else:
            out.append((" - " if c < 0 else " + ") + text)
    return "".join(out)
