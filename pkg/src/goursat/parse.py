"""Text syntax for expressions.

Grammar (loosest to tightest binding):

    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?          right associative
    primary := INTEGER | NAME | KERNEL "(" sum ")" | "(" sum ")"

So -x^2 means -(x^2) and 2^-1 is allowed.  Exponents must evaluate to an
integer constant and decimal literals are rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .expr import KERNELS, Expression, ExprError, as_expr, symbol


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position
        self.text = text


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names plus named symbolic constants."""

    coordinates: tuple
    parameters: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        names = self.coordinates + self.parameters
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ValueError(f"chart names must be unique: {', '.join(dup)} repeated")
        for n in names:
            if not _IDENT.fullmatch(n) or n in KERNELS:
                raise ValueError(f"invalid symbol name '{n}'")

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def index(self, name: str) -> int:
        return self.coordinates.index(name)

    def symbols(self) -> list:
        return [symbol(n) for n in self.coordinates]

    def with_parameters(self, extra) -> "Chart":
        return Chart(self.coordinates, self.parameters + tuple(p for p in extra if p not in self.parameters))


_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^(),.]))")


def _tokenize(text):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            out.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            out.append(("name", m.group(2), start))
        else:
            op = m.group(3)
            if op == ".":
                raise ParseError("decimal literals are not allowed, use a rational such as 3/2", start, text)
            if op == "**":
                raise ParseError("use '^' for powers", start, text)
            out.append(("op", op, start))
        pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text, names):
        self.text = text
        self.names = names
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            self.error(f"expected '{op}'", t)

    def sum(self):
        left = self.product()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "+-":
                self.take()
                right = self.product()
                left = left + right if t[1] == "+" else left - right
            else:
                return left

    def product(self):
        left = self.unary()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "*/":
                self.take()
                right = self.unary()
                if t[1] == "*":
                    left = left * right
                else:
                    if right.is_zero():
                        self.error("division by zero", t)
                    left = left / right
            else:
                return left

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] in "+-":
            self.take()
            v = self.unary()
            return -v if t[1] == "-" else v
        return self.power()

    def power(self):
        base = self.primary()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.take()
            etok = self.peek()
            e = self.unary()
            val = e.constant_value()
            if val is None or val.denominator != 1:
                self.error("exponent must be an integer constant", etok)
            n = int(val)
            if n < 0 and base.is_zero():
                self.error("zero raised to a negative power", etok)
            return base ** n
        return base

    def primary(self):
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return as_expr(int(val))
        if kind == "name":
            if val in KERNELS:
                nxt = self.peek()
                if not (nxt[0] == "op" and nxt[1] == "("):
                    self.error(f"function '{val}' needs an argument in parentheses", nxt)
                self.take()
                arg = self.sum()
                self.expect(")")
                try:
                    return KERNELS[val](arg)
                except ExprError as exc:
                    raise ParseError(str(exc), pos, self.text) from None
            if val not in self.names:
                self.error(f"unknown symbol '{val}'", t)
            return symbol(val)
        if kind == "op" and val == "(":
            v = self.sum()
            self.expect(")")
            return v
        if kind == "end":
            self.error("unexpected end of input", t)
        self.error(f"unexpected token '{val}'", t)


def parse(text: str, chart: Chart | None = None, extra_names=()) -> Expression:
    """Parse text into a canonical Expression over the names of ``chart``."""
    names = set(extra_names)
    if chart is not None:
        names |= set(chart.coordinates) | set(chart.parameters)
    p = _Parser(text, names)
    if p.peek()[0] == "end":
        raise ParseError("empty expression", 0, text)
    v = p.sum()
    t = p.peek()
    if t[0] != "end":
        p.error(f"unexpected token '{t[1]}'", t)
    return v
