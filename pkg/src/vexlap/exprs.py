"""Arithmetic expression trees for exponent and potential fields.

Grammar (precedence low to high):

    expr    :=  term  (('+' | '-') term)*
    term    :=  unary (('*' | '/') unary)*
    unary   :=  '-' unary | power
    power   :=  atom ('^' unary)?          # right-associative, above unary minus
    atom    :=  number | 'pi' | 'x' | 'y'
              | func '(' expr (',' expr)* ')' | '(' expr ')'

Only the variables x and y and a fixed function whitelist survive parsing,
so downstream hypothesis checks stay decidable by sampling.  Trees are
immutable and evaluation is pure, hence safe to share across workers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "EvalDomainError",
    "MissingBindingError",
    "parse",
    "evaluate",
    "free_vars",
    "to_source",
]


class ExprError(ValueError):
    """Base class for expression parsing/evaluation failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} (at offset {offset})")
        self.name = name
        self.offset = offset


class ArityError(ExprError):
    def __init__(self, name: str, expected: int, got: int, offset: int):
        super().__init__(
            f"{name} expects {expected} argument(s), got {got} (at offset {offset})"
        )
        self.offset = offset


class EvalDomainError(ExprError):
    """Division by zero, sqrt of a negative, or an invalid power."""


class MissingBindingError(ExprError):
    """Expression references y but no y value was supplied."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 'x' or 'y'


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]

_FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "abs": 1, "sqrt": 1, "min": 2, "max": 2}
_CONSTANTS = {"pi": math.pi}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []  # (kind, text, offset)
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            off = len(source) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", off)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                e = BinOp(text, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                e = BinOp(text, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right-associative; the exponent may carry a unary minus
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in ("x", "y"):
                return Var(text)
            if text in _CONSTANTS:
                return Num(_CONSTANTS[text])
            if text in _FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k, t, _ = self.peek()
                    if k == "op" and t == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                want = _FUNCTIONS[text]
                if len(args) != want:
                    raise ArityError(text, want, len(args), off)
                return Call(text, tuple(args))
            raise UnknownIdentifierError(text, off)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError("expected an operand", off)


def parse(source: str) -> Expr:
    """Parse ``source`` into an immutable expression tree."""
    return _Parser(source).parse()


def free_vars(e: Expr) -> set:
    """Exact set of variable names appearing in ``e``."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_vars(e.arg)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        out = set()
        for a in e.args:
            out |= free_vars(a)
        return out
    return set()


def _check(cond: np.ndarray, message: str) -> None:
    if np.any(cond):
        raise EvalDomainError(message)


def _eval(e: Expr, x, y):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name == "x":
            return x
        if y is None:
            raise MissingBindingError("expression references y but no y was given")
        return y
    if isinstance(e, Neg):
        return -_eval(e.arg, x, y)
    if isinstance(e, BinOp):
        a = _eval(e.left, x, y)
        b = _eval(e.right, x, y)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            _check(np.asarray(b) == 0.0, "division by zero")
            return a / b
        # power: reject negative base with non-integer exponent and 0^negative
        aa = np.asarray(a, dtype=float)
        bb = np.asarray(b, dtype=float)
        _check((aa < 0.0) & (bb != np.floor(bb)),
               "negative base with non-integer exponent")
        _check((aa == 0.0) & (bb < 0.0), "zero raised to a negative power")
        return np.power(a, b)
    a = _eval(e.args[0], x, y)
    if e.func == "sin":
        return np.sin(a)
    if e.func == "cos":
        return np.cos(a)
    if e.func == "exp":
        return np.exp(a)
    if e.func == "abs":
        return np.abs(a)
    if e.func == "sqrt":
        _check(np.asarray(a) < 0.0, "sqrt of a negative value")
        return np.sqrt(a)
    b = _eval(e.args[1], x, y)
    if e.func == "min":
        return np.minimum(a, b)
    return np.maximum(a, b)


def evaluate(e: Expr, x, y: Optional[object] = None):
    """Evaluate ``e`` at x (and y for two-variable fields).

    Accepts scalars or numpy arrays; broadcasting follows numpy rules.
    Scalar inputs return a plain float.
    """
    out = _eval(e, x, y)
    if np.isscalar(x) and (y is None or np.isscalar(y)):
        return float(out)
    shape = np.broadcast_shapes(
        np.shape(x), np.shape(y) if y is not None else ())
    return np.broadcast_to(np.asarray(out, dtype=float), shape)


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _src(e: Expr, parent_prec: int, right_of_same=False) -> str:
    if isinstance(e, Num):
        s = repr(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = _src(e.arg, _PRECEDENCE["neg"])
        s = f"-{inner}"
        return f"({s})" if parent_prec > _PRECEDENCE["neg"] else s
    if isinstance(e, Call):
        args = ", ".join(_src(a, 0) for a in e.args)
        return f"{e.func}({args})"
    prec = _PRECEDENCE[e.op]
    # - and / are left-associative; ^ is right-associative
    left = _src(e.left, prec + (1 if e.op == "^" else 0))
    right = _src(e.right, prec + (0 if e.op == "^" else 1))
    s = f"{left} {e.op} {right}"
    return f"({s})" if parent_prec > prec else s


def to_source(e: Expr) -> str:
    """Pretty-print ``e`` so that it re-parses to an equivalent tree."""
    return _src(e, 0)
