"""
Scalar field expressions: a small recursive-descent parser and an evaluator
that runs on floats, numpy arrays, or forward-mode derivative jets.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?            # right-associative
    atom   := NUMBER | VAR | CONST | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1..xN`` or ``u1..un`` (one prefix per expression).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Base class for expression errors; ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownNameError(ExprError):
    pass


class ArityError(ExprError):
    pass


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


# -- tokenizer / parser -------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", len(text[:start].encode("utf-8")))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str, num_vars: int) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0
        self.num_vars = num_vars
        self.prefix: str | None = None

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.peek()
        if kind != "op" or val != value:
            shown = val or "end of input"
            raise ExprSyntaxError(f"expected {value!r}, found {shown!r}", off)
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                nargs = 1
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    self.expr()
                    nargs += 1
                self.expect(")")
                if nargs != 1:
                    raise ArityError(f"function {val!r} takes 1 argument, got {nargs}", off)
                return Call(val, arg)
            if val in CONSTANTS:
                return Const(val)
            m = re.fullmatch(r"([xu])([1-9]\d*)", val)
            if m:
                prefix, idx = m.group(1), int(m.group(2))
                if self.prefix is not None and prefix != self.prefix:
                    raise UnknownNameError(f"cannot mix {self.prefix}-variables with {val!r}", off)
                if idx > self.num_vars:
                    raise UnknownNameError(f"variable {val!r} exceeds the {self.num_vars} available", off)
                self.prefix = prefix
                return Var(idx - 1)
            raise UnknownNameError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        shown = val or "end of input"
        raise ExprSyntaxError(f"unexpected {shown!r}", off)


# -- printing -----------------------------------------------------------------

def to_text(node: Node, prefix: str = "x") -> str:
    """Render an AST. Negations and binary operations are always parenthesised."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{prefix}{node.index + 1}"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg, prefix)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left, prefix)} {node.op} {to_text(node.right, prefix)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg, prefix)})"
    raise TypeError(f"not an expression node: {node!r}")


# -- forward-mode jets ----------------------------------------------------------


class Dual:
    """First-order forward-mode number: value plus gradient vector."""

    __slots__ = ("val", "grad")

    def __init__(self, val: float, grad: np.ndarray) -> None:
        self.val = val
        self.grad = grad

    @staticmethod
    def _lift(other, like: "Dual") -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(float(other), np.zeros_like(like.grad))

    def __add__(self, o):
        o = self._lift(o, self)
        return Dual(self.val + o.val, self.grad + o.grad)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o, self)
        return Dual(self.val - o.val, self.grad - o.grad)

    def __rsub__(self, o):
        return self._lift(o, self) - self

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __mul__(self, o):
        o = self._lift(o, self)
        return Dual(self.val * o.val, self.val * o.grad + o.val * self.grad)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o, self)
        q = self.val / o.val
        return Dual(q, (self.grad - q * o.grad) / o.val)

    def __rtruediv__(self, o):
        return self._lift(o, self) / self

    def chain(self, f0: float, f1: float, f2: float = 0.0) -> "Dual":
        return Dual(f0, f1 * self.grad)


class HyperDual(Dual):
    """Second-order forward-mode number: value, gradient and Hessian.

    Arithmetic is the truncated second-order Taylor expansion, equivalent to
    nesting first-order duals but evaluated in one pass.
    """

    __slots__ = ("hess",)

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray) -> None:
        super().__init__(val, grad)
        self.hess = hess

    @staticmethod
    def _lift(other, like: "HyperDual") -> "HyperDual":
        if isinstance(other, HyperDual):
            return other
        return HyperDual(float(other), np.zeros_like(like.grad), np.zeros_like(like.hess))

    def __add__(self, o):
        o = self._lift(o, self)
        return HyperDual(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o, self)
        return HyperDual(self.val - o.val, self.grad - o.grad, self.hess - o.hess)

    def __neg__(self):
        return HyperDual(-self.val, -self.grad, -self.hess)

    def __mul__(self, o):
        o = self._lift(o, self)
        cross = np.outer(self.grad, o.grad)
        return HyperDual(
            self.val * o.val,
            self.val * o.grad + o.val * self.grad,
            self.val * o.hess + o.val * self.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o, self)
        return self * o.chain(1.0 / o.val, -1.0 / o.val**2, 2.0 / o.val**3)

    def chain(self, f0: float, f1: float, f2: float = 0.0) -> "HyperDual":
        return HyperDual(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))


def _apply(func: str, x):
    if isinstance(x, Dual):
        v = x.val
        if func == "sin":
            return x.chain(math.sin(v), math.cos(v), -math.sin(v))
        if func == "cos":
            return x.chain(math.cos(v), -math.sin(v), -math.cos(v))
        if func == "tan":
            t = math.tan(v)
            s2 = 1.0 + t * t
            return x.chain(t, s2, 2.0 * t * s2)
        if func == "exp":
            e = math.exp(v)
            return x.chain(e, e, e)
        if func == "log":
            return x.chain(math.log(v), 1.0 / v, -1.0 / (v * v))
        if func == "sqrt":
            r = math.sqrt(v)
            return x.chain(r, 0.5 / r, -0.25 / (r * v))
        if func == "abs":
            s = math.copysign(1.0, v)
            return x.chain(abs(v), s, 0.0)
        raise KeyError(func)
    return getattr(np, func)(x)


def _power(base, exponent):
    if isinstance(exponent, Dual):
        if isinstance(base, Dual):
            return _apply("exp", exponent * _apply("log", base))
        return _apply("exp", exponent * math.log(base))
    if isinstance(base, Dual):
        c = float(exponent)
        v = base.val
        if c == 0.0:
            return base.chain(1.0, 0.0, 0.0)
        f2 = c * (c - 1.0) * math.pow(v, c - 2.0) if c not in (1.0, 2.0) else (2.0 if c == 2.0 else 0.0)
        return base.chain(math.pow(v, c), c * math.pow(v, c - 1.0), f2)
    return np.power(base, exponent)


def evaluate(node: Node, values):
    """Evaluate ``node`` with ``values[i]`` bound to variable i (floats, arrays or jets)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return values[node.index]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.arg, values)
    if isinstance(node, BinOp):
        a = evaluate(node.left, values)
        b = evaluate(node.right, values)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return _power(a, b)
    if isinstance(node, Call):
        return _apply(node.func, evaluate(node.arg, values))
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class ScalarFieldExpr:
    """A parsed scalar field of ``num_vars`` real variables."""

    source: str
    num_vars: int
    ast: Node
    prefix: str = "x"

    def __call__(self, point) -> float:
        return float(evaluate(self.ast, [float(v) for v in point]))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised evaluation on an array of shape (num_vars, ...)."""
        points = np.asarray(points, dtype=float)
        out = evaluate(self.ast, list(points))
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[1:]).copy()

    def gradient(self, point) -> tuple[float, np.ndarray]:
        n = self.num_vars
        eye = np.eye(n)
        jets = [Dual(float(v), eye[i]) for i, v in enumerate(point)]
        out = evaluate(self.ast, jets)
        if not isinstance(out, Dual):
            return float(out), np.zeros(n)
        return float(out.val), np.array(out.grad, dtype=float)

    def hessian(self, point) -> tuple[float, np.ndarray, np.ndarray]:
        n = self.num_vars
        eye = np.eye(n)
        zero = np.zeros((n, n))
        jets = [HyperDual(float(v), eye[i], zero) for i, v in enumerate(point)]
        out = evaluate(self.ast, jets)
        if not isinstance(out, HyperDual):
            return float(out), np.zeros(n), np.zeros((n, n))
        return float(out.val), np.array(out.grad, dtype=float), np.array(out.hess, dtype=float)

    def to_text(self) -> str:
        return to_text(self.ast, self.prefix)


def parse_scalar_field(text: str, num_vars: int) -> ScalarFieldExpr:
    """Parse ``text`` into a field of ``num_vars`` variables.

    Raises ExprSyntaxError (with byte offset), UnknownNameError or ArityError.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if num_vars < 1:
        raise ValueError("num_vars must be positive")
    parser = _Parser(text, num_vars)
    ast = parser.parse()
    return ScalarFieldExpr(text, num_vars, ast, parser.prefix or "x")
