"""Arithmetic expression trees for the potential q(x).

Grammar (precedence low to high):

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := "-" factor | power
    power   := atom ("^" factor)?          # right associative
    atom    := NUMBER | "x" | NAME "(" expr ")" | "(" expr ")"

`^` binds tighter than unary minus, so "-x^2" is -(x^2). Supported
functions: sin, cos, exp, sinh, cosh. Parse errors carry the byte
offset of the offending token. Evaluation is pure and accepts either
a scalar or an ndarray for x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PotentialExpr", "ExprError", "EvalError", "parse_potential"]

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sinh": np.sinh,
    "cosh": np.cosh,
}


class ExprError(ValueError):
    """Parse failure; `offset` is the byte offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ArithmeticError):
    """Evaluation produced a non-finite value (pole, overflow)."""


# ---------------------------------------------------------------- tokens

_TOK_NUM = "num"
_TOK_NAME = "name"
_TOK_OP = "op"
_TOK_END = "end"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_e = False
            while j < n:
                cj = text[j]
                if cj.isdigit() or cj == ".":
                    j += 1
                elif cj in "eE" and not seen_e and j + 1 < n and (
                    text[j + 1].isdigit() or text[j + 1] in "+-"
                ):
                    seen_e = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            try:
                float(text[i:j])
            except ValueError:
                raise ExprError(f"bad number {text[i:j]!r}", i) from None
            toks.append((_TOK_NUM, text[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((_TOK_NAME, text[i:j], i))
            i = j
        elif c in "+-*/^()":
            toks.append((_TOK_OP, c, i))
            i += 1
        else:
            raise ExprError(f"unexpected character {c!r}", i)
    toks.append((_TOK_END, "", n))
    return toks


# ---------------------------------------------------------------- nodes


@dataclass(frozen=True)
class _Num:
    value: float

    def eval(self, x):
        return self.value if np.isscalar(x) else np.full_like(np.asarray(x, dtype=float), self.value)

    def render(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class _Var:
    def eval(self, x):
        return x

    def render(self) -> str:
        return "x"


@dataclass(frozen=True)
class _Unary:
    arg: object

    def eval(self, x):
        return -self.arg.eval(x)

    def render(self) -> str:
        return f"(-{self.arg.render()})"


@dataclass(frozen=True)
class _Bin:
    op: str
    left: object
    right: object

    def eval(self, x):
        a = self.left.eval(x)
        b = self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.divide(a, b)
        # integer power
        return np.power(a, b)

    def render(self) -> str:
        return f"({self.left.render()}{self.op}{self.right.render()})"


@dataclass(frozen=True)
class _Call:
    name: str
    arg: object

    def eval(self, x):
        return _FUNCS[self.name](self.arg.eval(x))

    def render(self) -> str:
        return f"{self.name}({self.arg.render()})"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, op: str):
        kind, val, off = self.next()
        if kind != _TOK_OP or val != op:
            raise ExprError(f"expected {op!r}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != _TOK_END:
            raise ExprError(f"unexpected trailing {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "+-":
                self.next()
                node = _Bin(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "*/":
                self.next()
                node = _Bin(val, node, self.factor())
            else:
                return node

    def factor(self):
        kind, val, _ = self.peek()
        if kind == _TOK_OP and val == "-":
            self.next()
            return _Unary(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, off = self.peek()
        if kind == _TOK_OP and val == "^":
            self.next()
            expo = self.factor()  # right associative, allows -n
            if not _is_integer_exponent(expo):
                raise ExprError("exponent must be an integer literal", off)
            return _Bin("^", base, expo)
        return base

    def atom(self):
        kind, val, off = self.next()
        if kind == _TOK_NUM:
            return _Num(float(val))
        if kind == _TOK_NAME:
            if val == "x":
                return _Var()
            if val in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _Call(val, arg)
            raise ExprError(f"unknown identifier {val!r}", off)
        if kind == _TOK_OP and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprError(f"unexpected {val!r}" if val else "unexpected end of input", off)


def _is_integer_exponent(node) -> bool:
    if isinstance(node, _Num):
        return float(node.value).is_integer()
    if isinstance(node, _Unary):
        return _is_integer_exponent(node.arg)
    if isinstance(node, _Bin) and node.op == "^":
        # chained integer powers stay integer (right-associative towers)
        return _is_integer_exponent(node.left) and _is_integer_exponent(node.right)
    return False


@dataclass(frozen=True)
class PotentialExpr:
    """Parsed, immutable expression over x. Evaluation is deterministic."""

    source: str
    root: object

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        val = self.root.eval(x)
        if np.isscalar(x) or np.ndim(x) == 0:
            val = float(val)
            if not math.isfinite(val):
                raise EvalError(f"potential {self.source!r} is not finite at x={x}")
            return val
        val = np.asarray(val, dtype=float)
        if not np.all(np.isfinite(val)):
            bad = np.asarray(x)[~np.isfinite(val)][0]
            raise EvalError(f"potential {self.source!r} is not finite at x={bad}")
        return val

    def render(self) -> str:
        """Parenthesized form; parse(render(p)) reproduces the same tree."""
        return self.root.render()


def parse_potential(text: str) -> PotentialExpr:
    if not text or not text.strip():
        raise ExprError("empty expression", 0)
    return PotentialExpr(text, _Parser(text).parse())
