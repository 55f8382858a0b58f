"""Grid certificates for the structural hypotheses of the inequalities.

Properties are checked on finite log-spaced grids, never proved; a passing
check is reported as ``verified-numeric``.  A failing check carries a
witness (a point or a pair of points) at which re-evaluating the defining
inequality fails by more than the comparison tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .functions.cumulative import FunctionSpec, cumulative
from .functions.expr import Expr, render, vectorized

__all__ = [
    "CertStatus", "Certificate", "PROPERTIES", "PremiseError",
    "check_property", "verify_ratio_lemma", "recheck_witness", "asserted",
]

RTOL = 1e-12
# relative tolerance for monotonicity of finite-difference derivatives
DERIV_RTOL = 1e-6
DEFAULT_WINDOW = (1e-6, 1e3)
PAIR_WINDOW = (1e-3, 1e3)
MAX_PAIRS = 512 * 512
ZERO_PROBE = 1e-9

PROPERTIES = (
    "non-negative",
    "positive",
    "monotone-nondecreasing",
    "monotone-nonincreasing",
    "convex",
    "submultiplicative",
    "ratio-x-over-g-nonincreasing",
    "zero-at-zero",
)


class CertStatus(str, Enum):
    VERIFIED = "verified-numeric"
    REFUTED = "refuted"
    ASSERTED = "asserted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Certificate:
    property: str
    status: CertStatus
    grid: str
    witness: tuple | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status in (CertStatus.VERIFIED, CertStatus.ASSERTED)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "status": self.status.value,
            "grid": self.grid,
            "witness": list(self.witness) if self.witness is not None else None,
            "detail": self.detail,
        }


class PremiseError(ValueError):
    """The premises of a lemma do not hold for the given input."""


def asserted(prop: str, reason: str = "not checkable on a grid") -> Certificate:
    return Certificate(prop, CertStatus.ASSERTED, "none", None, reason)


def _grid(spec: FunctionSpec, n: int, window=DEFAULT_WINDOW) -> np.ndarray:
    lo, hi = spec.domain.lo, spec.domain.hi
    a = max(lo, window[0]) if lo == 0.0 else lo
    b = min(hi, window[1])
    if not b > a:
        b = hi
    return np.geomspace(a, b, n)


def _describe(x: np.ndarray) -> str:
    return f"log-spaced {x.size} points on [{x[0]:.3g}, {x[-1]:.3g}]"


def _values(f, x):
    with np.errstate(all="ignore"):
        return np.asarray(f(x), dtype=float)


def _monotone(x, y, sign, rtol):
    """Index of the worst violation of ``sign*(y[i+1]-y[i]) >= -tol`` or None."""
    finite = np.isfinite(y)
    d = sign * np.diff(y)
    tol = rtol * np.maximum(np.abs(y[:-1]), np.abs(y[1:]))
    ok_pair = finite[:-1] & finite[1:]
    viol = np.where(ok_pair, -(d + tol), -np.inf)
    i = int(np.argmax(viol))
    return (i if viol[i] > 0 else None), bool(finite.all())


def _result(prop, x, viol_witness, all_finite, detail=""):
    grid = _describe(x)
    if viol_witness is not None:
        return Certificate(prop, CertStatus.REFUTED, grid, tuple(float(v) for v in viol_witness),
                           detail)
    if not all_finite:
        return Certificate(prop, CertStatus.INCONCLUSIVE, grid, None,
                           "non-finite value on the grid")
    return Certificate(prop, CertStatus.VERIFIED, grid, None, detail)


def _pairs(n: int):
    x = np.geomspace(*PAIR_WINDOW, n)
    xi, yi = np.meshgrid(x, x, indexing="ij")
    xs, ys = xi.ravel(), yi.ravel()
    if xs.size > MAX_PAIRS:
        pick = np.random.default_rng(0).choice(xs.size, MAX_PAIRS, replace=False)
        pick.sort()
        xs, ys = xs[pick], ys[pick]
    return x, xs, ys


def _second_difference_h(x):
    return np.maximum(1e-5, 1e-5 * x)


def check_property(spec: FunctionSpec | Expr, prop: str, grid_size: int = 512) -> Certificate:
    """Certify or refute ``prop`` for ``spec`` on a log-spaced grid.

    >>> from hardycheck.functions import parse
    >>> check_property(parse("x^2"), "submultiplicative").status.value
    'verified-numeric'
    """
    if isinstance(spec, Expr):
        spec = FunctionSpec(spec)
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; expected one of {PROPERTIES}")
    f = vectorized(spec.expr)

    if prop == "submultiplicative":
        x, xs, ys = _pairs(grid_size)
        lhs = _values(f, xs * ys)
        with np.errstate(all="ignore"):
            rhs = _values(f, xs) * _values(f, ys)
            finite = np.isfinite(lhs) & np.isfinite(rhs)
            tol = RTOL * np.maximum(np.abs(lhs), np.abs(rhs))
            viol = np.where(finite, lhs - rhs - tol, -np.inf)
        i = int(np.argmax(viol))
        witness = (xs[i], ys[i]) if viol[i] > 0 else None
        grid = f"{xs.size} log-uniform pairs on [{PAIR_WINDOW[0]:g}, {PAIR_WINDOW[1]:g}]^2"
        if witness is not None:
            return Certificate(prop, CertStatus.REFUTED, grid, tuple(map(float, witness)),
                               f"phi(xy)={lhs[i]!r} > phi(x)phi(y)={rhs[i]!r}")
        if not finite.all():
            return Certificate(prop, CertStatus.INCONCLUSIVE, grid, None,
                               "non-finite value on the pair grid")
        return Certificate(prop, CertStatus.VERIFIED, grid)

    if prop == "zero-at-zero":
        v = _values(f, np.array([ZERO_PROBE]))[0]
        grid = f"x={ZERO_PROBE:g}"
        if not math.isfinite(v):
            return Certificate(prop, CertStatus.INCONCLUSIVE, grid, None, "non-finite value")
        if abs(v) <= ZERO_PROBE:
            return Certificate(prop, CertStatus.VERIFIED, grid)
        return Certificate(prop, CertStatus.REFUTED, grid, (ZERO_PROBE,), f"value {v!r}")

    x = _grid(spec, grid_size)
    if prop == "convex":
        x = x[x >= 1e-4] if (x >= 1e-4).sum() >= 3 else x
        h = _second_difference_h(x)
        y0 = _values(f, x)
        d2 = _values(f, x + h) + _values(f, x - h) - 2.0 * y0
        finite = np.isfinite(d2)
        tol = RTOL * np.maximum(np.abs(y0), 1e-300)
        viol = np.where(finite, -(d2 + tol), -np.inf)
        i = int(np.argmax(viol))
        w = (x[i],) if viol[i] > 0 else None
        return _result(prop, x, w, bool(finite.all()), "symmetric second differences")

    if prop in ("non-negative", "positive"):
        y = _values(f, x)
        finite = np.isfinite(y)
        if prop == "positive":
            bad = finite & (y <= 0)
        else:
            scale = np.max(np.abs(y[finite])) if finite.any() else 0.0
            bad = finite & (y < -RTOL * scale)
        w = (x[int(np.argmax(bad))],) if bad.any() else None
        return _result(prop, x, w, bool(finite.all()))

    if prop in ("monotone-nondecreasing", "monotone-nonincreasing", "ratio-x-over-g-nonincreasing"):
        y = _values(f, x)
        sign = +1.0
        if prop == "monotone-nonincreasing":
            sign = -1.0
        elif prop == "ratio-x-over-g-nonincreasing":
            with np.errstate(all="ignore"):
                y = x / y
            sign = -1.0
        i, all_finite = _monotone(x, y, sign, RTOL)
        w = (x[i], x[i + 1]) if i is not None else None
        return _result(prop, x, w, all_finite)

    raise AssertionError(prop)  # pragma: no cover


def recheck_witness(spec: FunctionSpec | Expr, cert: Certificate) -> bool:
    """True when the defining inequality still fails at ``cert.witness``."""
    if cert.witness is None:
        return False
    expr = spec.expr if isinstance(spec, FunctionSpec) else spec
    f = vectorized(expr)

    def v(t):
        return float(_values(f, np.array([t], dtype=float))[0])

    w = cert.witness
    p = cert.property
    if p == "submultiplicative":
        a, b = v(w[0] * w[1]), v(w[0]) * v(w[1])
        return a - b > RTOL * max(abs(a), abs(b))
    if p == "zero-at-zero":
        return abs(v(w[0])) > ZERO_PROBE
    if p == "positive":
        return v(w[0]) <= 0
    if p == "non-negative":
        return v(w[0]) < 0
    if p == "convex":
        x = w[0]
        h = float(_second_difference_h(np.array(x)))
        y0 = v(x)
        return v(x + h) + v(x - h) - 2 * y0 < -RTOL * max(abs(y0), 1e-300)
    a, b = v(w[0]), v(w[1])
    if p == "ratio-x-over-g-nonincreasing":
        a, b = w[0] / a, w[1] / b
    sign = 1.0 if p == "monotone-nondecreasing" else -1.0
    return sign * (b - a) < -RTOL * max(abs(a), abs(b))


def _direction(x, y, rtol) -> tuple[str, ...]:
    """Monotonicity directions consistent with ``y`` (both for a constant)."""
    up, finite = _monotone(x, y, +1.0, rtol)
    down, _ = _monotone(x, y, -1.0, rtol)
    if not finite:
        return ()
    return tuple(d for d, v in (("nondecreasing", up), ("nonincreasing", down)) if v is None)


def verify_ratio_lemma(which: str, spec: FunctionSpec | Expr, grid_size: int = 512) -> Certificate:
    """Check the conclusion of one of the two ratio-monotonicity lemmas.

    ``lemma-phi``: phi >= 0 submultiplicative with phi(0)=0 and phi'
    monotone implies phi(x)/x monotone in the same direction.
    ``lemma-G``: g > 0 with g(x)/x monotone implies G(x)/x**2 monotone in the
    same direction, G the cumulative integral of g.

    Raises :class:`PremiseError` when a premise fails; the conclusion is then
    not tested.
    """
    if isinstance(spec, Expr):
        spec = FunctionSpec(spec)
    f = vectorized(spec.expr)
    x = _grid(spec, grid_size)

    if which == "lemma-phi":
        for prop in ("non-negative", "submultiplicative", "zero-at-zero"):
            cert = check_property(spec, prop, grid_size)
            if not cert.passed:
                raise PremiseError(f"premises not satisfied: {prop} is {cert.status.value}")
        h = 1e-6 * x
        with np.errstate(all="ignore"):
            deriv = (_values(f, x + h) - _values(f, x - h)) / (2 * h)
        premise = _direction(x, deriv, DERIV_RTOL)
        if not premise:
            raise PremiseError("premises not satisfied: phi' is not monotone on the grid")
        with np.errstate(all="ignore"):
            ratio = _values(f, x) / x
        label = "phi(x)/x"
    elif which == "lemma-G":
        cert = check_property(spec, "positive", grid_size)
        if not cert.passed:
            raise PremiseError(f"premises not satisfied: positive is {cert.status.value}")
        with np.errstate(all="ignore"):
            g_over_x = _values(f, x) / x
        premise = _direction(x, g_over_x, RTOL)
        if not premise:
            raise PremiseError("premises not satisfied: g(x)/x is not monotone on the grid")
        G = cumulative(spec)
        with np.errstate(all="ignore"):
            ratio = G(x) / x**2
        label = "G(x)/x^2"
    else:
        raise ValueError(f"unknown lemma {which!r}; expected 'lemma-phi' or 'lemma-G'")

    sign = +1.0
    direction = premise[0]
    if direction == "nonincreasing":
        sign = -1.0
    i, finite = _monotone(x, ratio, sign, RTOL if which == "lemma-phi" else 1e-10)
    prop = f"{which}:{label} {direction}"
    if i is not None:
        return Certificate(prop, CertStatus.REFUTED, _describe(x), (float(x[i]), float(x[i + 1])),
                           f"conclusion fails for {render(spec.expr)}")
    if not finite:
        return Certificate(prop, CertStatus.INCONCLUSIVE, _describe(x), None, "non-finite ratio")
    return Certificate(prop, CertStatus.VERIFIED, _describe(x))
