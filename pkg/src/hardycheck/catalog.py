"""The inequality catalog: parameter constraints, hypotheses, both sides.

Every entry compares ``int lhs`` with ``C * int rhs`` over a domain that is
either the half-line, ``(0, b]`` or a finite window ``[a, b]``.  Integrands
are ratios of high powers that can underflow in double precision, so points
far from 1 (and any non-finite value) are re-evaluated in ``np.longdouble``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .functions import Cumulative, Expr, FunctionSpec, cumulative, parse
from .functions.cumulative import breakpoints as expr_breakpoints
from .functions.expr import vectorized
from .hypotheses import Certificate, asserted, check_property
from .quadrature import Interval, QuadOptions, TailClass, classify_tail

__all__ = [
    "Params", "Constraint", "InequalityEntry", "VerificationTask", "CatalogError",
    "ConstraintError", "MissingSlotError", "HypothesisError", "ENTRY_IDS",
    "get_entry", "inequality_constant", "instantiate_task", "list_catalog",
]

WIDE = np.longdouble


class CatalogError(ValueError):
    """Base class for task construction failures."""


class ConstraintError(CatalogError):
    pass


class MissingSlotError(CatalogError):
    pass


class HypothesisError(CatalogError):
    def __init__(self, slot: str, cert: Certificate):
        self.slot = slot
        self.certificate = cert
        where = f" at witness {cert.witness}" if cert.witness is not None else ""
        super().__init__(f"hypothesis {cert.property!r} on slot {slot} is "
                         f"{cert.status.value}{where}")


@dataclass(frozen=True)
class Params:
    """Entry parameters.

    ``a`` is the exponent parameter of the generalized weighted entries;
    window endpoints live in ``interval`` so the two never collide.
    """

    p: float | None = None
    q: float | None = None
    a: float | None = None
    interval: Interval | None = None

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("p", "q", "a") if getattr(self, k) is not None}
        if self.interval is not None:
            out["interval"] = [self.interval.lo, self.interval.hi]
        return out


@dataclass(frozen=True)
class Constraint:
    text: str
    test: Callable[[Params], bool]


@dataclass(frozen=True)
class _Ctx:
    """Bound slots as array callables of one dtype, plus the cumulatives."""

    p: float | None
    q: float | None
    a: float | None
    fns: Mapping[str, Callable]
    F: Callable | None
    G: Callable | None

    def __getattr__(self, name):
        try:
            return self.fns[name]
        except KeyError:
            raise AttributeError(name) from None


def _div(num, den):
    # an underflowed numerator is treated as a zero integrand value
    with np.errstate(all="ignore"):
        out = num / den
    return np.where(num == 0, 0.0, out)


def _pow(base, e):
    with np.errstate(all="ignore"):
        return np.where(base == 0, 0.0 if e > 0 else (1.0 if e == 0 else np.inf),
                        np.power(base, e))


@dataclass(frozen=True)
class InequalityEntry:
    id: str
    direction: str
    slots: tuple[str, ...]
    hypotheses: Mapping[str, tuple[str, ...]]
    params: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    constant_fn: Callable[[Params], float]
    lhs: Callable[[_Ctx, np.ndarray], np.ndarray]
    rhs: Callable[[_Ctx, np.ndarray], np.ndarray]
    lhs_text: str
    rhs_text: str
    anchor: str
    domain: str = "half-line"  # half-line | initial-segment | window
    asserted_props: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    flags: tuple[str, ...] = ()
    hidden: bool = False

    def descriptor(self) -> dict:
        return {
            "id": self.id,
            "direction": self.direction,
            "slots": list(self.slots),
            "params": list(self.params),
            "constraints": [c.text for c in self.constraints],
            "hypotheses": {s: list(v) for s, v in self.hypotheses.items()},
            "lhs": self.lhs_text,
            "rhs": self.rhs_text,
            "domain": self.domain,
            "anchor": self.anchor,
            "flags": list(self.flags),
        }


# --------------------------------------------------------------------------
# constraints and constants

def _c(text, test):
    return Constraint(text, test)


P_GT_1 = _c("p>1", lambda P: P.p > 1)
P_GE_1 = _c("p>=1", lambda P: P.p >= 1)
P_IN_01 = _c("0<p<1", lambda P: 0 < P.p < 1)
A_IN_01 = _c("0<a<1", lambda P: 0 < P.a < 1)
A_POS = _c("a>0", lambda P: P.a > 0)
WINDOW = _c("0<a<b<inf (interval)",
            lambda P: P.interval.lo > 0 and math.isfinite(P.interval.hi))
SEGMENT = _c("interval=(0,b] with 0<b<=inf", lambda P: P.interval.lo == 0)
Q_NATURAL = _c("q in {0,1,2,...}", lambda P: P.q >= 0 and float(P.q).is_integer())


def _hardy_const(P):
    return (P.p / (P.p - 1.0)) ** P.p


def _thm31_const(P):
    p, q, a = P.p, P.q, P.a
    return 1.0 / (((a - 1.0) * (p - 1.0) + 2.0 * q - 1.0) * (1.0 - a) ** (p - 1.0))


def _thm32_const(P):
    p, q, a = P.p, P.q, P.a
    return 1.0 / (((a + 1.0) * (1.0 - p) + 2.0 * q - 1.0) * (1.0 + a) ** (p - 1.0))


def _thm32_statement_const(P):
    p, q, a = P.p, P.q, P.a
    return 1.0 / (((a + 1.0) * (p - 1.0) + 2.0 * q - 1.0) * (1.0 + a) ** (p - 1.0))


def _ws_const(P):
    p, a = P.p, P.a
    return 1.0 / (a * (p - 1.0) * (1.0 - a) ** (p - 1.0))


def _one_over_p_minus_1(P):
    return 1.0 / (P.p - 1.0)


def _one(P):
    return 1.0


# --------------------------------------------------------------------------
# integrands; x arrives as a double or extended-precision array

def _hardy_lhs(c, x):
    return _pow(c.F(x) / x, c.p)


def _hardy_rhs(c, x):
    return _pow(c.f(x), c.p)


def _ws_lhs(c, x):
    return _pow(_div(c.F(x), c.g(x)), c.p)


def _ws_rhs(c, x):
    return _pow(_div(x * c.f(x), c.g(x)), c.p)


def _g31_lhs(c, x):
    return _div(_pow(c.F(x), c.p), _pow(c.G(x), c.q))


def _g31_rhs(c, x):
    return _div(_pow(x * c.f(x), c.p), _pow(c.G(x), c.q))


def _thm34_lhs(c, x):
    num = c.phi(c.F(x)) * c.psi(c.G(x))
    return _div(num * x ** (1.0 - c.p), c.phi(x) * c.psi(x))


def _thm34_statement_lhs(c, x):
    return c.phi(c.F(x)) * c.psi(c.G(x)) * x ** (1.0 - c.p)


def _thm34_rhs(c, x):
    return c.phi(c.f(x)) * c.psi(c.g(x)) * x ** (1.0 - c.p)


def _thm35_lhs(c, x):
    return c.phi(_div(c.F(x), c.G(x)))


def _thm35_rhs(c, x):
    return c.phi(_div(c.f(x), c.g(x)))


def _thm35_pow_lhs(c, x):
    return _pow(_div(c.F(x), c.G(x)), c.p)


def _thm35_pow_rhs(c, x):
    return _pow(_div(c.f(x), c.g(x)), c.p)


def _thm36_lhs(c, x):
    k = int(c.q)
    return x ** (2.0 - c.p) * _div(c.phi(x ** k * c.F(x)), c.phi(x) ** (k + 2))


def _thm36_rhs(c, x):
    return x ** (2.0 - c.p) * _div(c.phi(c.f(x)), c.phi(x))


def _thm37_lhs(c, x):
    return c.phi(c.F(x) * c.G(x) / (x * x))


def _thm37_rhs(c, x):
    return c.phi(c.f(x) * c.g(x))


# --------------------------------------------------------------------------
# the entries

NN = "non-negative"
POS = "positive"
UP = "monotone-nondecreasing"
DOWN = "monotone-nonincreasing"
RATIO = "ratio-x-over-g-nonincreasing"
PHI_34 = (NN, UP, "submultiplicative", "convex")

_THM31_HYP = {"f": (NN,), "g": (POS, RATIO)}

_ENTRIES = (
    InequalityEntry(
        "hardy", "<=", ("f",), {"f": (NN,)}, ("p",), (P_GT_1,), _hardy_const,
        _hardy_lhs, _hardy_rhs, "(F/x)^p", "f^p",
        "classical Hardy inequality on the half-line; sharp constant (p/(p-1))^p"),
    InequalityEntry(
        "hardy-finite", "<=", ("f",), {"f": (NN,)}, ("p", "interval"), (P_GT_1, WINDOW),
        _hardy_const, _hardy_lhs, _hardy_rhs, "(F/x)^p", "f^p",
        "Hardy inequality restricted to a window [a,b]", domain="window"),
    InequalityEntry(
        "ws-weighted", "<=", ("f", "g"), {"f": (NN, UP), "g": (POS, RATIO)}, ("p", "a"),
        (P_GT_1, A_IN_01), _ws_const, _ws_lhs, _ws_rhs, "(F/g)^p", "(x f/g)^p",
        "weighted refinement for non-decreasing f cited in the introduction",
        flags=("constant uses a(p-1); printed a(1-p) is negative for p>1",)),
    InequalityEntry(
        "thm31", "<=", ("f", "g"), _THM31_HYP, ("p", "q", "a"),
        (P_GT_1, A_IN_01,
         _c("q>(p-a(p-1))/2", lambda P: P.q > (P.p - P.a * (P.p - 1.0)) / 2.0)),
        _thm31_const, _g31_lhs, _g31_rhs, "F^p/G^q", "(x f)^p/G^q",
        "first main generalization; reduces to the classical constant at a=1/p, q=p/2"),
    InequalityEntry(
        "thm32", ">=", ("f", "g"), _THM31_HYP, ("p", "q", "a"),
        (P_IN_01, A_POS,
         _c("q>(p+a(p-1))/2", lambda P: P.q > (P.p + P.a * (P.p - 1.0)) / 2.0)),
        _thm32_const, _g31_lhs, _g31_rhs, "F^p/G^q", "(x f)^p/G^q",
        "reverse generalization for 0<p<1",
        flags=("constant from proof; statement differs",)),
    InequalityEntry(
        "thm32-statement", ">=", ("f", "g"), _THM31_HYP, ("p", "q", "a"),
        (P_IN_01, A_POS,
         _c("q>(p+a(p-1))/2", lambda P: P.q > (P.p + P.a * (P.p - 1.0)) / 2.0),
         _c("(a+1)(p-1)+2q-1>0",
            lambda P: (P.a + 1.0) * (P.p - 1.0) + 2.0 * P.q - 1.0 > 0)),
        _thm32_statement_const, _g31_lhs, _g31_rhs, "F^p/G^q", "(x f)^p/G^q",
        "reverse generalization, constant as displayed in the statement",
        flags=("statement-form constant; falsification target",)),
    InequalityEntry(
        "thm34", "<=", ("f", "g", "phi", "psi"),
        {"f": (POS, UP), "g": (POS, UP), "phi": PHI_34, "psi": PHI_34}, ("p",), (P_GT_1,),
        _one_over_p_minus_1, _thm34_lhs, _thm34_rhs,
        "phi(F) psi(G) x^(1-p) / (phi(x) psi(x))", "phi(f) psi(g) x^(1-p)",
        "composite inequality for convex submultiplicative phi, psi",
        flags=("LHS includes phi(x)psi(x) denominator per proof",)),
    InequalityEntry(
        "thm35", "<=", ("f", "g", "phi"),
        {"f": (NN, UP), "g": (POS, DOWN), "phi": (NN, UP)}, ("interval",), (SEGMENT,),
        _one, _thm35_lhs, _thm35_rhs, "phi(F/G)", "phi(f/g)",
        "quotient inequality on (0,b], b possibly infinite", domain="initial-segment",
        asserted_props={"g": ("continuous",)}),
    InequalityEntry(
        "thm35-pow", "<=", ("f", "g"), {"f": (NN, UP), "g": (POS, DOWN)},
        ("p", "interval"), (P_GE_1, SEGMENT), _one, _thm35_pow_lhs, _thm35_pow_rhs,
        "(F/G)^p", "(f/g)^p", "power case phi(x)=x^p of the quotient inequality",
        domain="initial-segment", asserted_props={"g": ("continuous",)}),
    InequalityEntry(
        "thm36", "<=", ("f", "phi"),
        {"f": (NN,), "phi": (NN, "convex", "submultiplicative", "zero-at-zero")},
        ("p", "q"), (P_GT_1, Q_NATURAL), _one_over_p_minus_1, _thm36_lhs, _thm36_rhs,
        "x^(2-p) phi(x^q F) / phi(x)^(q+2)", "x^(2-p) phi(f) / phi(x)",
        "generalization with an integer power q of the weight",
        asserted_props={"phi": ("twice-differentiable",)}),
    InequalityEntry(
        "thm37", "<=", ("f", "g", "phi"),
        {"f": (NN, UP), "g": (POS, UP), "phi": (NN, UP)}, ("interval",), (WINDOW,),
        _one, _thm37_lhs, _thm37_rhs, "phi(F G / x^2)", "phi(f g)",
        "product inequality on a window [a,b] for non-decreasing phi", domain="window"),
    InequalityEntry(
        "thm38", ">=", ("f", "g", "phi"),
        {"f": (NN, UP), "g": (POS, UP), "phi": (NN, DOWN)}, ("interval",), (WINDOW,),
        _one, _thm37_lhs, _thm37_rhs, "phi(F G / x^2)", "phi(f g)",
        "converse product inequality for non-increasing phi", domain="window"),
)

_STATEMENT_34 = replace(
    _ENTRIES[6], id="thm34-statement", lhs=_thm34_statement_lhs,
    lhs_text="phi(F) psi(G) x^(1-p)",
    anchor="composite inequality as displayed in the statement (no denominator)",
    flags=("statement form; not part of the public catalog",), hidden=True)

_BY_ID = {e.id: e for e in _ENTRIES + (_STATEMENT_34,)}
ENTRY_IDS = tuple(e.id for e in _ENTRIES)


def get_entry(entry_id: str, form: str = "proof") -> InequalityEntry:
    """Look up an entry; ``form="statement"`` selects the statement variant of thm34."""
    if form not in ("proof", "statement"):
        raise CatalogError(f"form must be 'proof' or 'statement', got {form!r}")
    if form == "statement":
        if entry_id != "thm34":
            raise CatalogError("only thm34 has a separate statement form "
                               "(thm32's is the entry thm32-statement)")
        entry_id = "thm34-statement"
    try:
        return _BY_ID[entry_id]
    except KeyError:
        raise CatalogError(f"unknown entry id {entry_id!r}; known: {', '.join(ENTRY_IDS)}") from None


def list_catalog() -> list[dict]:
    """Descriptors of the public entries, in a fixed order."""
    return [e.descriptor() for e in _ENTRIES]


def _check_params(entry: InequalityEntry, params: Params):
    for name in entry.params:
        v = getattr(params, name)
        if v is None:
            raise ConstraintError(f"parameter {name} is required by {entry.id}")
        if name != "interval" and not math.isfinite(v):
            raise ConstraintError(f"parameter {name} must be finite, got {v}")
    for c in entry.constraints:
        if not c.test(params):
            raise ConstraintError(f"constraint {c.text} violated for {entry.id} "
                                  f"with {params.to_dict()}")


def inequality_constant(entry_id: str, params: Params) -> float:
    """The multiplicative constant of ``entry_id`` at ``params``.

    >>> inequality_constant("thm31", Params(p=2, a=0.5, q=1))
    4.0
    """
    entry = get_entry(entry_id)
    _check_params(entry, params)
    c = float(entry.constant_fn(params))
    if not (c > 0 and math.isfinite(c)):
        raise ConstraintError(f"constant of {entry_id} is not finite and positive ({c})")
    return c


# --------------------------------------------------------------------------
# tasks

@dataclass(frozen=True)
class VerificationTask:
    entry: InequalityEntry
    params: Params
    bindings: Mapping[str, FunctionSpec]
    opts: QuadOptions
    constant: float
    domain: Interval
    breakpoints: tuple[float, ...]
    lhs_integrand: Callable = field(repr=False)
    rhs_integrand: Callable = field(repr=False)
    certificates: tuple[tuple[str, Certificate], ...] = ()
    tails: Mapping[str, TailClass] = field(default_factory=dict)
    vacuous: bool = False

    @property
    def entry_id(self) -> str:
        return self.entry.id

    def bindings_text(self) -> dict:
        return {s: spec.text for s, spec in self.bindings.items()}


def _as_spec(v) -> FunctionSpec:
    if isinstance(v, FunctionSpec):
        return v
    if isinstance(v, Expr):
        return FunctionSpec(v)
    if isinstance(v, str):
        return FunctionSpec(parse(v))
    raise TypeError(f"cannot bind {type(v).__name__} to a function slot")


def _certify(slot: str, spec: FunctionSpec, props, extra) -> tuple[FunctionSpec, list]:
    have = {c.property: c for c in spec.certificates if c.passed}
    certs = []
    for prop in props:
        cert = have.get(prop) or check_property(spec, prop)
        if not cert.passed:
            raise HypothesisError(slot, cert)
        certs.append(cert)
    certs.extend(asserted(prop, "assumed, not checked on a grid") for prop in extra)
    declared = frozenset(spec.declared_props) | frozenset(props) | frozenset(extra)
    return replace(spec, declared_props=declared, certificates=tuple(certs)), certs


def _domain(entry: InequalityEntry, params: Params) -> Interval:
    if entry.domain == "half-line":
        return Interval(0.0)
    return params.interval


# inside this window powers up to about x**25 stay in double range
SAFE_X = (1e-12, 1e12)


def _integrand(fn, ctx, wide_ctx):
    def h(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            y = np.asarray(fn(ctx, x), dtype=float)
            redo = ~np.isfinite(y) | (x < SAFE_X[0]) | (x > SAFE_X[1])
            if redo.any():
                y[redo] = np.asarray(fn(wide_ctx, x[redo].astype(WIDE)), dtype=float)
        return y

    h._hardycheck_vectorized = True
    return h


def instantiate_task(entry_id: str, params: Params, bindings: Mapping,
                     opts: QuadOptions | None = None, form: str = "proof") -> VerificationTask:
    """Bind functions and parameters to an entry, certifying every hypothesis.

    Raises :class:`ConstraintError`, :class:`MissingSlotError` or
    :class:`HypothesisError`.  A task whose two integrands both have
    divergent tails is still returned, with ``vacuous=True``.
    """
    entry = get_entry(entry_id, form)
    _check_params(entry, params)
    constant = float(entry.constant_fn(params))
    if not (constant > 0 and math.isfinite(constant)):
        raise ConstraintError(f"constant of {entry.id} is not finite and positive ({constant})")
    missing = [s for s in entry.slots if s not in bindings]
    if missing:
        raise MissingSlotError(f"{entry.id} needs slot(s) {', '.join(missing)}")
    extra = sorted(set(bindings) - set(entry.slots))
    if extra:
        raise MissingSlotError(f"{entry.id} has no slot(s) {', '.join(extra)}")

    specs, certs = {}, []
    for slot in entry.slots:
        spec, cs = _certify(slot, _as_spec(bindings[slot]), entry.hypotheses.get(slot, ()),
                            entry.asserted_props.get(slot, ()))
        specs[slot] = spec
        certs.extend((slot, c) for c in cs)

    cums: dict[str, Cumulative] = {}
    for slot, name in (("f", "F"), ("g", "G")):
        if slot in specs:
            cums[name] = cumulative(specs[slot])
    ctx, wide = (_Ctx(params.p, params.q, params.a,
                      {s: vectorized(spec.expr, dt) for s, spec in specs.items()},
                      cums.get("F"), cums.get("G")) for dt in (float, WIDE))
    lhs = _integrand(entry.lhs, ctx, wide)
    rhs = _integrand(entry.rhs, ctx, wide)
    domain = _domain(entry, params)
    bps = tuple(sorted({b for s in ("f", "g") if s in specs
                        for b in expr_breakpoints(specs[s].expr)}))

    opts = opts or QuadOptions()
    tails = {}
    if domain.unbounded:
        start = max([opts.tail_split, domain.lo, *bps])
        tails = {"lhs": classify_tail(lhs, start), "rhs": classify_tail(rhs, start)}
    vacuous = bool(tails) and all(t.verdict == "divergent" for t in tails.values())
    return VerificationTask(entry, params, specs, opts, constant, domain, bps, lhs, rhs,
                            tuple(certs), tails, vacuous)
