"""Expression trees for test functions of one positive real variable ``x``.

Nodes are immutable and compare structurally, so ``parse(render(e)) == e``
is a meaningful identity.  Evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Scale", "Pow", "Exp", "Log",
    "Min", "Max", "Trunc", "X",
    "parse", "render", "evaluate", "ParseError", "EvaluationError",
]


class ParseError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class EvaluationError(ArithmeticError):
    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{message} (node path: {path})")


class Expr:
    """Base class; subclasses implement ``_eval`` on float arrays."""

    __slots__ = ()

    def _eval(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def children(self) -> tuple[tuple[str, "Expr"], ...]:
        return ()

    def __call__(self, x):
        return evaluate(self, x)

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("constants must be finite")
        object.__setattr__(self, "value", float(self.value))

    def _eval(self, x):
        return np.full(x.shape, self.value)


@dataclass(frozen=True)
class Var(Expr):
    def _eval(self, x):
        return x


X = Var()


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def _eval(self, x):
        return self.left._eval(x) + self.right._eval(x)

    def children(self):
        return (("left", self.left), ("right", self.right))


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def _eval(self, x):
        return self.left._eval(x) * self.right._eval(x)

    def children(self):
        return (("left", self.left), ("right", self.right))


@dataclass(frozen=True)
class Scale(Expr):
    factor: float
    arg: Expr

    def __post_init__(self):
        object.__setattr__(self, "factor", float(self.factor))

    def _eval(self, x):
        return self.factor * self.arg._eval(x)

    def children(self):
        return (("arg", self.arg),)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float

    def __post_init__(self):
        object.__setattr__(self, "exponent", float(self.exponent))

    def _eval(self, x):
        return np.power(self.base._eval(x), self.exponent)

    def children(self):
        return (("base", self.base),)


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    @property
    def rate(self) -> float | None:
        """``lam`` when the node is ``exp(lam*x)``, else None."""
        if isinstance(self.arg, Var):
            return 1.0
        if isinstance(self.arg, Scale) and isinstance(self.arg.arg, Var):
            return self.arg.factor
        return None

    def _eval(self, x):
        return np.exp(self.arg._eval(x))

    def children(self):
        return (("arg", self.arg),)


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr

    def _eval(self, x):
        return np.log(self.arg._eval(x))

    def children(self):
        return (("arg", self.arg),)


@dataclass(frozen=True)
class Min(Expr):
    left: Expr
    right: Expr

    def _eval(self, x):
        return np.minimum(self.left._eval(x), self.right._eval(x))

    def children(self):
        return (("left", self.left), ("right", self.right))


@dataclass(frozen=True)
class Max(Expr):
    left: Expr
    right: Expr

    def _eval(self, x):
        return np.maximum(self.left._eval(x), self.right._eval(x))

    def children(self):
        return (("left", self.left), ("right", self.right))


@dataclass(frozen=True)
class Trunc(Expr):
    """``arg`` on the closed window ``[lo, hi]``, zero outside."""

    arg: Expr
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (0.0 <= lo < hi):
            raise ValueError(f"truncation window must satisfy 0 <= lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def _eval(self, x):
        out = np.zeros(x.shape, dtype=x.dtype)
        inside = (x >= self.lo) & (x <= self.hi)
        if inside.any():
            out[inside] = self.arg._eval(x[inside])
        return out

    def children(self):
        return (("arg", self.arg),)


# --------------------------------------------------------------------------
# evaluation

def _checked(node: Expr, x: np.ndarray, path: str) -> np.ndarray:
    if isinstance(node, Trunc):
        out = np.zeros(x.shape, dtype=x.dtype)
        inside = (x >= node.lo) & (x <= node.hi)
        if inside.any():
            out[inside] = _checked(node.arg, x[inside], path + "/arg")
        return out
    for name, child in node.children():
        _checked(child, x, f"{path}/{name}")
    with np.errstate(all="ignore"):
        val = node._eval(x)
    bad = ~np.isfinite(val)
    if bad.any():
        raise EvaluationError(
            f"non-finite value of {render(node)} at x={float(x[bad][0])!r}", path
        )
    return val


def evaluate(e: Expr, x):
    """Evaluate ``e`` at a scalar or array ``x``.

    Raises :class:`EvaluationError` naming the first node (depth-first) whose
    value is not finite.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    with np.errstate(all="ignore"):
        val = e._eval(arr)
    if not np.all(np.isfinite(val)):
        _checked(e, arr, type(e).__name__)
    if np.ndim(x) == 0:
        return float(val[0])
    return val.reshape(np.shape(x))


def vectorized(e: Expr, dtype=float):
    """Unchecked array evaluator (non-finite values pass through).

    ``dtype=np.longdouble`` evaluates with the platform's extended exponent
    range, which keeps ratios of tiny powers away from ``0/0``.
    """

    def f(x):
        x = np.asarray(x, dtype=dtype)
        with np.errstate(all="ignore"):
            return e._eval(x.ravel()).reshape(x.shape)

    f._hardycheck_vectorized = True
    return f


# --------------------------------------------------------------------------
# rendering

def _num(v: float) -> str:
    s = repr(float(v))
    return f"({s})" if v < 0 or s.startswith("-") else s


def render(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Add):
        return f"({render(e.left)} + {render(e.right)})"
    if isinstance(e, Mul):
        return f"({render(e.left)}*{render(e.right)})"
    if isinstance(e, Scale):
        return f"({_num(e.factor)}*{render(e.arg)})"
    if isinstance(e, Pow):
        return f"({render(e.base)})^{_num(e.exponent)}"
    if isinstance(e, Exp):
        return f"exp({render(e.arg)})"
    if isinstance(e, Log):
        return f"log({render(e.arg)})"
    if isinstance(e, Min):
        return f"min({render(e.left)}, {render(e.right)})"
    if isinstance(e, Max):
        return f"max({render(e.left)}, {render(e.right)})"
    if isinstance(e, Trunc):
        return f"trunc({render(e.arg)}, {_num(e.lo)}, {_num(e.hi)})"
    raise TypeError(f"unknown node {e!r}")


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)
_FUNCS = {"exp": 1, "log": 1, "min": 2, "max": 2, "trunc": 3}


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _has_var(e: Expr) -> bool:
    return isinstance(e, Var) or any(_has_var(c) for _, c in e.children())


def _neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    return Scale(-1.0, e)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const):
        return Scale(a.value, b)
    if isinstance(b, Const):
        return Scale(b.value, a)
    return Mul(a, b)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, value=None):
        kind, val, pos = self.tok
        if value is not None and val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {what}", pos)
        self.i += 1
        return self.tokens[self.i - 1]

    def constant(self, node: Expr, pos: int, what: str) -> float:
        if _has_var(node):
            raise ParseError(f"{what} must be a constant", pos)
        try:
            return evaluate(node, 1.0)
        except EvaluationError as exc:
            raise ParseError(f"{what} is not finite", pos) from exc

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Add(e, _neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op, pos = self.take()[1:]
            rhs = self.unary()
            if op == "*":
                e = _mul(e, rhs)
            elif isinstance(rhs, Const):
                if rhs.value == 0.0:
                    raise ParseError("division by zero", pos)
                e = Scale(1.0 / rhs.value, e)
            else:
                e = _mul(e, Pow(rhs, -1.0))
        return e

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.take()
            return _neg(self.unary())
        if self.tok[0] == "op" and self.tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            pos = self.take()[2]
            exponent = self.constant(self.unary(), pos, "exponent")
            return Pow(base, exponent)
        return base

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.take()
            if not math.isfinite(float(val)):
                raise ParseError(f"number {val!r} is out of range", pos)
            return Const(float(val))
        if kind == "name":
            self.take()
            if val == "x":
                return X
            if val not in _FUNCS:
                raise ParseError(f"unknown identifier {val!r}", pos)
            self.take("(")
            args = [self.expr()]
            while self.tok[1] == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            if len(args) != _FUNCS[val]:
                raise ParseError(f"{val}() takes {_FUNCS[val]} argument(s), got {len(args)}", pos)
            if val == "exp":
                return Exp(args[0])
            if val == "log":
                return Log(args[0])
            if val == "min":
                return Min(args[0], args[1])
            if val == "max":
                return Max(args[0], args[1])
            lo = self.constant(args[1], pos, "trunc lower bound")
            hi = self.constant(args[2], pos, "trunc upper bound")
            try:
                return Trunc(args[0], lo, hi)
            except ValueError as exc:
                raise ParseError(str(exc), pos) from exc
        if kind == "op" and val == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos)


def parse(text: str) -> Expr:
    """Parse the ASCII expression grammar into an :class:`Expr`.

    >>> parse("exp(-x)").rate
    -1.0
    """
    return _Parser(text).parse()
