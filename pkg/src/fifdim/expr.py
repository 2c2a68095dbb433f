"""Closed-form expressions of one variable: parsing, evaluation, differentiation.

Grammar (whitespace insignificant)::

    expr     := term { ("+" | "-") term }
    term     := unary { ("*" | "/") unary }
    unary    := "-" unary | power
    power    := atom [ "^" exponent ]
    atom     := NUMBER | "x" | FUNC "(" expr ")" | "(" expr ")"
    exponent := [ "-" ] NUMBER | "(" expr ")"        # must contain no x
    FUNC     := "abs" | "sin" | "cos" | "exp" | "log" | "sqrt"
    NUMBER   := digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ]

Precedence, tightest first: power, unary minus, * and /, + and -.  The
exponent of ^ must evaluate to a constant; it is folded to a float at parse
time so differentiation stays elementary.  Chained ^ needs parentheses.

Trees are frozen dataclasses compared structurally.  to_string followed by
parse reproduces any tree the parser or differentiate can emit (those never
carry negative literal constants; a hand-built Const with a negative value
prints as a literal that reparses to the negated positive constant, which is
value-equal but not structurally equal).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCS = ("abs", "sin", "cos", "exp", "log", "sqrt")


class ParseError(ValueError):
    """Malformed expression text; offset is the 0-based byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log of a nonpositive value, division
    by zero, fractional power of a negative base, overflow)."""

    def __init__(self, message: str, node: "Node", at: float | None = None):
        where = f" at x={at!r}" if at is not None else ""
        super().__init__(f"{message} in {to_string(node)!r}{where}")
        self.node = node
        self.at = at


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a FUNC name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


Node = Union[Const, Var, Unary, Binary, Pow]

X = Var()

# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            shown = repr(val) if kind != "end" else "end of input"
            raise ParseError(f"expected {op!r}, found {shown}", off)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Binary(val, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Binary(val, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> float:
        kind, val, off = self.peek()
        negate = False
        if kind == "op" and val == "-":
            self.advance()
            negate = True
            kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            e = float(val)
            return -e if negate else e
        if kind == "op" and val == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            if contains_var(inner):
                raise ParseError("exponent must be constant", off)
            try:
                e = evaluate(inner, 0.0)
            except DomainError:
                raise ParseError("exponent is not a finite constant", off) from None
            return -e if negate else e
        shown = repr(val) if kind != "end" else "end of input"
        raise ParseError(f"expected a constant exponent, found {shown}", off)

    def atom(self) -> Node:
        kind, val, off = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val == "x":
                return X
            if val in FUNCS:
                self.expect_op("(")
                arg = self.expr()
                k2, v2, off2 = self.peek()
                if k2 == "op" and v2 == ",":
                    raise ParseError(f"{val} takes exactly one argument", off2)
                self.expect_op(")")
                return Unary(val, arg)
            raise ParseError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        shown = repr(val) if kind != "end" else "end of input"
        raise ParseError(f"unexpected {shown}", off)


def parse(text: str) -> Node:
    """Parse expression text into a tree.  Raises ParseError with the byte
    offset of the first problem."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing

_LEVEL_ADD = 1
_LEVEL_MUL = 2
_LEVEL_NEG = 3
_LEVEL_POW = 4
_LEVEL_ATOM = 5


def _fmt(node: Node, need: int) -> str:
    if isinstance(node, Const):
        s, level = repr(node.value), (_LEVEL_NEG if node.value < 0 else _LEVEL_ATOM)
    elif isinstance(node, Var):
        s, level = "x", _LEVEL_ATOM
    elif isinstance(node, Unary):
        if node.op == "neg":
            s, level = "-" + _fmt(node.arg, _LEVEL_NEG), _LEVEL_NEG
        else:
            s, level = f"{node.op}({_fmt(node.arg, 0)})", _LEVEL_ATOM
    elif isinstance(node, Binary):
        level = _LEVEL_ADD if node.op in "+-" else _LEVEL_MUL
        s = _fmt(node.left, level) + node.op + _fmt(node.right, level + 1)
    else:
        e = node.exponent
        es = repr(e) if e >= 0 else f"({e!r})"
        s, level = _fmt(node.base, _LEVEL_POW + 1) + "^" + es, _LEVEL_POW
    return f"({s})" if level < need else s


def to_string(node: Node) -> str:
    """Compact text form; parse(to_string(t)) is structurally equal to t for
    parser- and differentiate-produced trees."""
    return _fmt(node, 0)


# ---------------------------------------------------------------------------
# structure queries

def contains_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Unary):
        return contains_var(node.arg)
    if isinstance(node, Binary):
        return contains_var(node.left) or contains_var(node.right)
    if isinstance(node, Pow):
        return contains_var(node.base)
    return False


def contains_abs(node: Node) -> bool:
    if isinstance(node, Unary):
        return node.op == "abs" or contains_abs(node.arg)
    if isinstance(node, Binary):
        return contains_abs(node.left) or contains_abs(node.right)
    if isinstance(node, Pow):
        return contains_abs(node.base)
    return False


# ---------------------------------------------------------------------------
# evaluation

def _is_integral(e: float) -> bool:
    return float(e).is_integer()


def evaluate(node: Node, x: float) -> float:
    """Evaluate at a scalar point.  Returns a finite float or raises
    DomainError naming the offending subtree."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(x)
    if isinstance(node, Unary):
        v = evaluate(node.arg, x)
        if node.op == "neg":
            return -v
        if node.op == "abs":
            return abs(v)
        if node.op == "sin":
            return math.sin(v)
        if node.op == "cos":
            return math.cos(v)
        if node.op == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                raise DomainError("overflow in exp", node, x) from None
        if node.op == "log":
            if v <= 0.0:
                raise DomainError("log of a nonpositive value", node, x)
            return math.log(v)
        if v < 0.0:
            raise DomainError("square root of a negative value", node, x)
        return math.sqrt(v)
    if isinstance(node, Binary):
        a = evaluate(node.left, x)
        b = evaluate(node.right, x)
        if node.op == "+":
            r = a + b
        elif node.op == "-":
            r = a - b
        elif node.op == "*":
            r = a * b
        else:
            if b == 0.0:
                raise DomainError("division by zero", node, x)
            r = a / b
        if not math.isfinite(r):
            raise DomainError("overflow", node, x)
        return r
    base = evaluate(node.base, x)
    e = node.exponent
    if base < 0.0 and not _is_integral(e):
        raise DomainError("fractional power of a negative base", node, x)
    if base == 0.0 and e < 0.0:
        raise DomainError("zero raised to a negative power", node, x)
    try:
        r = math.pow(base, e)
    except OverflowError:
        raise DomainError("overflow in power", node, x) from None
    if not math.isfinite(r):
        raise DomainError("overflow in power", node, x)
    return r


def evaluate_many(node: Node, xs: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over an array of points, same domain rules as
    evaluate."""
    xs = np.asarray(xs, dtype=float)

    def rec(n: Node) -> np.ndarray:
        if isinstance(n, Const):
            return np.full(xs.shape, n.value)
        if isinstance(n, Var):
            return xs
        if isinstance(n, Unary):
            v = rec(n.arg)
            if n.op == "neg":
                return -v
            if n.op == "abs":
                return np.abs(v)
            if n.op == "sin":
                return np.sin(v)
            if n.op == "cos":
                return np.cos(v)
            if n.op == "exp":
                with np.errstate(over="ignore"):
                    r = np.exp(v)
                _check_finite(r, n)
                return r
            if n.op == "log":
                bad = v <= 0.0
                if bad.any():
                    raise DomainError("log of a nonpositive value", n,
                                      float(xs[bad.argmax()]))
                return np.log(v)
            bad = v < 0.0
            if bad.any():
                raise DomainError("square root of a negative value", n,
                                  float(xs[bad.argmax()]))
            return np.sqrt(v)
        if isinstance(n, Binary):
            a = rec(n.left)
            b = rec(n.right)
            if n.op == "+":
                r = a + b
            elif n.op == "-":
                r = a - b
            elif n.op == "*":
                with np.errstate(over="ignore", invalid="ignore"):
                    r = a * b
            else:
                bad = b == 0.0
                if bad.any():
                    raise DomainError("division by zero", n, float(xs[bad.argmax()]))
                with np.errstate(over="ignore", invalid="ignore"):
                    r = a / b
            _check_finite(r, n)
            return r
        base = rec(n.base)
        e = n.exponent
        if not _is_integral(e):
            bad = base < 0.0
            if bad.any():
                raise DomainError("fractional power of a negative base", n,
                                  float(xs[bad.argmax()]))
        if e < 0.0:
            bad = base == 0.0
            if bad.any():
                raise DomainError("zero raised to a negative power", n,
                                  float(xs[bad.argmax()]))
        with np.errstate(over="ignore", invalid="ignore"):
            r = np.power(base, e)
        _check_finite(r, n)
        return r

    def _check_finite(r: np.ndarray, n: Node) -> None:
        bad = ~np.isfinite(r)
        if bad.any():
            raise DomainError("overflow", n, float(xs[bad.argmax()]))

    return rec(node)


# ---------------------------------------------------------------------------
# differentiation

def _add(a: Node, b: Node) -> Node:
    if a == Const(0.0):
        return b
    if b == Const(0.0):
        return a
    return Binary("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if b == Const(0.0):
        return a
    if a == Const(0.0):
        return _neg(b)
    return Binary("-", a, b)


def _neg(a: Node) -> Node:
    if a == Const(0.0):
        return a
    return Unary("neg", a)


def _mul(a: Node, b: Node) -> Node:
    if a == Const(0.0) or b == Const(0.0):
        return Const(0.0)
    if a == Const(1.0):
        return b
    if b == Const(1.0):
        return a
    return Binary("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if a == Const(0.0):
        return a
    if b == Const(1.0):
        return a
    return Binary("/", a, b)


def _pow(base: Node, e: float) -> Node:
    if e == 0.0:
        return Const(1.0)
    if e == 1.0:
        return base
    return Pow(base, e)


def _const_times(c: float, rest: Node) -> Node:
    # keep emitted literal constants nonnegative so printing round-trips
    if c < 0:
        return _neg(_mul(Const(-c), rest))
    return _mul(Const(c), rest)


def differentiate(node: Node) -> Node:
    """Symbolic derivative.  abs differentiates to arg/abs(arg) times the
    inner derivative, valid away from the kink."""
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0)
    if isinstance(node, Unary):
        du = differentiate(node.arg)
        u = node.arg
        if node.op == "neg":
            return _neg(du)
        if node.op == "abs":
            return _mul(_div(u, Unary("abs", u)), du)
        if node.op == "sin":
            return _mul(Unary("cos", u), du)
        if node.op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        if node.op == "exp":
            return _mul(Unary("exp", u), du)
        if node.op == "log":
            return _div(du, u)
        return _div(du, _mul(Const(2.0), Unary("sqrt", u)))
    if isinstance(node, Binary):
        da = differentiate(node.left)
        db = differentiate(node.right)
        a, b = node.left, node.right
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, 2.0))
    du = differentiate(node.base)
    return _mul(_const_times(node.exponent, _pow(node.base, node.exponent - 1.0)), du)


# ---------------------------------------------------------------------------
# grid estimates

def sup_norm(node: Node, lo: float, hi: float, n: int = 4096,
             avoid_kinks: bool = False) -> float:
    """Sup of |expression| over n+1 equispaced points on [lo, hi]; a lower
    estimate of the true sup.

    With avoid_kinks, and only when the tree contains abs, sampling moves to
    the n midpoints of the grid cells so kinks sitting exactly on grid points
    (the typical case for derivative trees) are not evaluated.
    """
    if hi <= lo:
        raise ValueError("empty interval")
    if n < 1:
        raise ValueError("need at least one grid cell")
    if avoid_kinks and contains_abs(node):
        xs = lo + (np.arange(n) + 0.5) * ((hi - lo) / n)
    else:
        xs = np.linspace(lo, hi, n + 1)
    return float(np.max(np.abs(evaluate_many(node, xs))))
