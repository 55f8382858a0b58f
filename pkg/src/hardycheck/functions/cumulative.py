"""Cumulative integrals ``F(x) = int_0^x f(t) dt`` of expression trees.

A closed form is assembled when every node in the tree has a known
antiderivative (monomials ``k*x**b``, affine powers ``(c + k*x)**a``,
``exp(lam*x)``, ``log(k*x**b)``, sums, scalar multiples, min/max of a
monomial with a constant, truncation windows).  Anything else falls back to
quadrature anchored at cached dyadic points and breakpoints.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..quadrature import Interval, QuadOptions, classify_head, gk21, integrate
from .expr import (Add, Const, Exp, Expr, Log, Max, Min, Mul, Pow, Scale, Trunc,
                   Var, render, vectorized)

__all__ = ["Cumulative", "CumulativeDivergenceError", "cumulative", "breakpoints",
           "monomial", "FunctionSpec"]


class CumulativeDivergenceError(ValueError):
    """``int_0^x f`` diverges because of a non-integrable singularity at 0."""

    def __init__(self, node: Expr):
        self.node = node
        super().__init__(f"integral from 0 diverges at node {render(node)}")


@dataclass(frozen=True)
class FunctionSpec:
    """An expression with its domain, declared properties and certificates."""

    expr: Expr
    domain: Interval = Interval(0.0)
    declared_props: frozenset = frozenset()
    certificates: tuple = ()

    @property
    def text(self) -> str:
        return render(self.expr)

    def __call__(self, x):
        return vectorized(self.expr)(x)


class _NoClosedForm(Exception):
    pass


def monomial(e: Expr):
    """Return ``(k, b)`` when ``e`` is ``k * x**b`` on ``x > 0``, else None."""
    if isinstance(e, Var):
        return 1.0, 1.0
    if isinstance(e, Const):
        return e.value, 0.0
    if isinstance(e, Scale):
        m = monomial(e.arg)
        return None if m is None else (e.factor * m[0], m[1])
    if isinstance(e, Mul):
        a, b = monomial(e.left), monomial(e.right)
        if a is None or b is None:
            return None
        return a[0] * b[0], a[1] + b[1]
    if isinstance(e, Pow):
        m = monomial(e.base)
        if m is None or (m[0] < 0 and not float(e.exponent).is_integer()):
            return None
        if m[0] == 0:
            return None
        return m[0] ** e.exponent, m[1] * e.exponent
    return None


def _affine(e: Expr):
    """Return ``(c, k)`` when ``e`` is ``c + k*x``, else None."""
    m = monomial(e)
    if m is not None:
        if m[1] == 0.0:
            return m[0], 0.0
        if m[1] == 1.0:
            return 0.0, m[0]
        return None
    if isinstance(e, Add):
        a, b = _affine(e.left), _affine(e.right)
        if a is None or b is None:
            return None
        return a[0] + b[0], a[1] + b[1]
    if isinstance(e, Scale):
        a = _affine(e.arg)
        return None if a is None else (e.factor * a[0], e.factor * a[1])
    return None


@dataclass
class _Prim:
    """A primitive of a node.

    ``fn`` is the antiderivative.  When ``zeroed`` it is exactly
    ``int_0^x`` (computed without cancellation); otherwise it is some
    primitive on ``(0, inf)`` and ``bad`` is the node whose integral from 0
    diverges.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    zeroed: bool
    bad: Expr | None = None
    kinks: tuple = ()


def _mono_prim(k: float, b: float, node: Expr) -> _Prim:
    if b == -1.0:
        return _Prim(lambda x: k * np.log(x), False, node)
    if b < -1.0:
        return _Prim(lambda x: k * np.power(x, b + 1.0) / (b + 1.0), False, node)
    return _Prim(lambda x: k * np.power(x, b + 1.0) / (b + 1.0), True)


def _crossing(k: float, b: float, c: float) -> float:
    return (c / k) ** (1.0 / b)


def _minmax_prim(node, kind: str) -> _Prim:
    left, right = node.left, node.right
    if isinstance(left, Const) and not isinstance(right, Const):
        left, right = right, left
    if not isinstance(right, Const):
        raise _NoClosedForm
    c = right.value
    if isinstance(left, Const):
        v = min(left.value, c) if kind == "min" else max(left.value, c)
        return _Prim(lambda x: v * x, True)
    m = monomial(left)
    if m is None or m[0] <= 0:
        raise _NoClosedForm
    k, b = m
    M = _mono_prim(k, b, left)
    if c <= 0.0 or b == 0.0:
        # k*x**b > 0 >= c everywhere, or both sides constant
        if b == 0.0:
            v = min(k, c) if kind == "min" else max(k, c)
            return _Prim(lambda x: v * x, True)
        return _Prim(lambda x: c * x, True) if kind == "min" else M
    xs = _crossing(k, b, c)
    # below the crossing the monomial is smaller iff it is increasing
    mono_first = (b > 0) == (kind == "min")
    if mono_first:
        if not M.zeroed:
            return _Prim(M.fn, False, M.bad, (xs,))

        def fn(x, M=M.fn, xs=xs, c=c):
            return M(np.minimum(x, xs)) + c * np.maximum(x - xs, 0.0)
    else:
        m_xs = float(M.fn(np.array([xs]))[0])

        def fn(x, M=M.fn, xs=xs, c=c, m_xs=m_xs):
            return c * np.minimum(x, xs) + (M(np.maximum(x, xs)) - m_xs)
    return _Prim(fn, True, None, (xs,))


def _expm1_minus(y):
    """``expm1(y) - y`` without cancellation for small ``|y|``."""
    y = np.asarray(y)
    with np.errstate(all="ignore"):
        out = np.expm1(y) - y
    small = np.abs(y) < 0.5
    if small.any():
        ys = y[small]
        # Taylor series y^2/2! + y^3/3! + ...; 20 terms reach round-off for |y| < 0.5
        term = ys * ys / 2.0
        acc = term
        for n in range(3, 22):
            term = term * ys / n
            acc = acc + term
        out[small] = acc
    return out


def _expm1_term(e: Expr):
    """``(k, lam)`` when ``e`` is ``k*(exp(lam*x) - 1)`` written as a sum."""
    if not isinstance(e, Add):
        return None
    for c, t in ((e.left, e.right), (e.right, e.left)):
        if not isinstance(c, Const):
            continue
        k, inner = (t.factor, t.arg) if isinstance(t, Scale) else (1.0, t)
        if isinstance(inner, Exp) and inner.rate is not None and c.value == -k:
            return k, inner.rate
    return None


def _primitive(e: Expr) -> _Prim:
    m = monomial(e)
    if m is not None:
        return _mono_prim(m[0], m[1], e)
    em1 = _expm1_term(e)
    if em1 is not None and em1[1] != 0.0:
        k, lam = em1
        return _Prim(lambda x: k * _expm1_minus(lam * x) / lam, True)
    if isinstance(e, Scale):
        p = _primitive(e.arg)
        c = e.factor
        return _Prim(lambda x: c * p.fn(x), p.zeroed, p.bad, p.kinks)
    if isinstance(e, Add):
        a, b = _primitive(e.left), _primitive(e.right)
        return _Prim(lambda x: a.fn(x) + b.fn(x), a.zeroed and b.zeroed,
                     a.bad or b.bad, a.kinks + b.kinks)
    if isinstance(e, Exp):
        lam = e.rate
        if lam is None:
            raise _NoClosedForm
        if lam == 0.0:
            return _Prim(lambda x: x, True)
        return _Prim(lambda x: np.expm1(lam * x) / lam, True)
    if isinstance(e, Log):
        m = monomial(e.arg)
        if m is None or m[0] <= 0:
            raise _NoClosedForm
        logk, b = math.log(m[0]), m[1]
        return _Prim(lambda x: x * logk + b * (x * np.log(x) - x), True)
    if isinstance(e, Pow):
        aff = _affine(e.base)
        if aff is None or aff[0] <= 0 or aff[1] == 0:
            raise _NoClosedForm
        c, k = aff
        a = e.exponent
        if a == -1.0:
            return _Prim(lambda x: np.log1p(k * x / c) / k, True)
        scale = c ** (a + 1.0) / (k * (a + 1.0))
        return _Prim(lambda x: scale * np.expm1((a + 1.0) * np.log1p(k * x / c)), True)
    if isinstance(e, (Min, Max)):
        return _minmax_prim(e, "min" if isinstance(e, Min) else "max")
    if isinstance(e, Trunc):
        p = _primitive(e.arg)
        lo, hi = e.lo, e.hi
        if lo > 0.0:
            base = float(p.fn(np.array([lo]))[0])
            return _Prim(lambda x: p.fn(np.clip(x, lo, hi)) - base, True, None,
                         tuple(k for k in p.kinks if lo < k < hi))
        return _Prim(lambda x: p.fn(np.minimum(x, hi)), p.zeroed, p.bad,
                     tuple(k for k in p.kinks if k < hi))
    raise _NoClosedForm


def breakpoints(e: Expr) -> tuple[float, ...]:
    """Jump and kink locations of ``e`` on ``(0, inf)`` that can be located exactly."""
    pts: set[float] = set()

    def walk(node):
        if isinstance(node, Trunc):
            if node.lo > 0:
                pts.add(node.lo)
            if math.isfinite(node.hi):
                pts.add(node.hi)
        if isinstance(node, (Min, Max)):
            left, right = node.left, node.right
            if isinstance(left, Const):
                left, right = right, left
            m = monomial(left)
            if isinstance(right, Const) and m and m[0] > 0 and m[1] != 0 and right.value > 0:
                pts.add(_crossing(m[0], m[1], right.value))
        for _, child in node.children():
            walk(child)

    walk(e)
    return tuple(sorted(p for p in pts if p > 0 and math.isfinite(p)))


class Cumulative:
    """``F(x) = int_0^x f``; call with scalars or arrays.

    ``form`` is ``"closed"`` or ``"quadrature"``.  The quadrature form caches
    ``F`` at anchor points (breakpoints and powers of two) on first use; the
    cache is filled once under a lock and then only read.
    """

    _ANCHORS = 2.0 ** np.arange(-30, 61)

    def __init__(self, source: FunctionSpec, opts: QuadOptions | None = None):
        self.source = source
        self.breakpoints = breakpoints(source.expr)
        self._f = vectorized(source.expr)
        self._opts = opts or QuadOptions(abs_tol=1e-13, rel_tol=1e-12)
        try:
            prim = _primitive(source.expr)
        except _NoClosedForm:
            prim = None
        if prim is not None and not prim.zeroed:
            raise CumulativeDivergenceError(prim.bad)
        self._prim = prim
        self.form = "closed" if prim is not None else "quadrature"
        self._lock = threading.Lock()
        self._anchors: np.ndarray | None = None
        self._values: np.ndarray | None = None
        if prim is None:
            self._head_check()

    def _head_check(self):
        a0 = float(self._ANCHORS[0])
        est = integrate(self._f, Interval(0.0, a0), self._opts, self.breakpoints)
        if not est.converged:
            head = classify_head(self._f, a0)
            if head.verdict != "integrable":
                raise CumulativeDivergenceError(self.source.expr)

    def _populate(self):
        with self._lock:
            if self._values is not None:
                return
            anchors = np.unique(np.concatenate([self._ANCHORS, self.breakpoints]))
            values = np.empty(anchors.size)
            acc = integrate(self._f, Interval(0.0, float(anchors[0])), self._opts,
                            self.breakpoints).value
            values[0] = acc
            for i in range(1, anchors.size):
                acc += integrate(self._f, Interval(float(anchors[i - 1]), float(anchors[i])),
                                 self._opts).value
                values[i] = acc
            self._anchors = anchors
            self._values = values

    def _quad_eval(self, x: np.ndarray) -> np.ndarray:
        if self._values is None:
            self._populate()
        anchors, values = self._anchors, self._values
        idx = np.searchsorted(anchors, x, side="right") - 1
        out = np.empty(x.shape)
        low = idx < 0
        for i in np.flatnonzero(low):
            if x[i] <= 0.0:
                out[i] = 0.0
                continue
            out[i] = integrate(self._f, Interval(0.0, float(x[i])), self._opts,
                               self.breakpoints).value
        hi_idx = ~low
        if hi_idx.any():
            start = anchors[idx[hi_idx]]
            end = x[hi_idx]
            # two Kronrod panels between the anchor and x; no breakpoint lies inside
            mid = 0.5 * (start + end)
            k1 = gk21(self._f, start, mid)[0]
            k2 = gk21(self._f, mid, end)[0]
            out[hi_idx] = values[idx[hi_idx]] + k1 + k2
        return out

    def __call__(self, x):
        # extended-precision input stays extended on the closed-form path
        dtype = np.result_type(np.asarray(x).dtype, float)
        arr = np.atleast_1d(np.asarray(x, dtype=dtype))
        flat = arr.ravel()
        with np.errstate(all="ignore"):
            if self._prim is not None:
                out = np.asarray(self._prim.fn(flat), dtype=dtype)
            else:
                out = self._quad_eval(flat.astype(float)).astype(dtype)
        out = np.where(flat == 0.0, 0.0, out)
        if np.ndim(x) == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    @property
    def vectorized(self):
        def F(x):
            return self(x)

        F._hardycheck_vectorized = True
        return F


def cumulative(spec: FunctionSpec | Expr) -> Cumulative:
    """Build the cumulative integral of ``spec`` (closed form when possible)."""
    if isinstance(spec, Expr):
        spec = FunctionSpec(spec)
    return Cumulative(spec)
