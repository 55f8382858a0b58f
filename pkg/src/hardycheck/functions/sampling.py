"""Random admissible test functions drawn from small structured families.

Each family is a positive combination of a few basis terms chosen so that
its declared properties hold by construction; the sampler still certifies
every draw and resamples on failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cumulative import FunctionSpec
from .expr import parse

__all__ = ["FAMILIES", "Family", "SamplingError", "sample_admissible"]

MAX_TRIES = 20


class SamplingError(RuntimeError):
    pass


def _r(v: float) -> str:
    return f"{float(v):.6g}"


def _nondecreasing_term(rng, bounded=False) -> str:
    kinds = ("min", "exp") if bounded else ("min", "exp", "pow")
    kind = kinds[rng.integers(len(kinds))]
    w = _r(rng.uniform(0.2, 3.0))
    if kind == "min":
        return f"{w}*min(x, {_r(rng.uniform(0.2, 5.0))})"
    if kind == "exp":
        return f"{w}*(1 - exp(-{_r(rng.uniform(0.1, 5.0))}*x))"
    return f"{w}*x^{_r(rng.uniform(0.05, 2.0))}"


def _combo(rng, term, lo=1, hi=3) -> str:
    n = int(rng.integers(lo, hi + 1))
    return " + ".join(term(rng) for _ in range(n))


def _nonneg_nondecreasing(rng):
    return _combo(rng, _nondecreasing_term)


def _positive_nondecreasing(rng):
    return f"{_r(rng.uniform(0.1, 2.0))} + " + _combo(rng, _nondecreasing_term)


def _bounded_nondecreasing(rng):
    return _combo(rng, lambda r: _nondecreasing_term(r, bounded=True))


def _ratio_nonincreasing(rng):
    # x/g = x**(1-gamma)/c is non-increasing for gamma >= 1
    return f"{_r(rng.uniform(0.2, 3.0))}*x^{_r(rng.uniform(1.0, 2.0))}"


def _convex_submultiplicative(rng):
    if rng.random() < 0.5:
        return f"x^{_r(rng.uniform(1.0, 4.0))}"
    p1, p2 = sorted(rng.uniform(1.0, 4.0, size=2))
    return f"x^{_r(p1)} + x^{_r(p2)}"


def _positive_nonincreasing(rng):
    parts = [_r(rng.uniform(0.1, 2.0))]
    if rng.random() < 0.7:
        parts.append(f"{_r(rng.uniform(0.2, 3.0))}*exp(-{_r(rng.uniform(0.1, 5.0))}*x)")
    if rng.random() < 0.5:
        parts.append(f"{_r(rng.uniform(0.2, 3.0))}*(1 + x)^(-{_r(rng.uniform(0.2, 3.0))})")
    return " + ".join(parts)


def _window_constant(rng):
    s = rng.uniform(0.0, 5.0)
    t = s * rng.uniform(1.5, 50.0) + rng.uniform(0.5, 5.0)
    return f"{_r(rng.uniform(0.2, 3.0))}*trunc(1, {_r(s)}, {_r(t)})"


def _nonneg_integrable(rng):
    parts = [f"{_r(rng.uniform(0.2, 3.0))}*exp(-{_r(rng.uniform(0.2, 4.0))}*x)"]
    if rng.random() < 0.6:
        s = rng.uniform(0.1, 3.0)
        t = s * rng.uniform(2.0, 100.0)
        parts.append(f"{_r(rng.uniform(0.2, 3.0))}*trunc(x^{_r(rng.uniform(-0.9, 1.0))}, "
                     f"{_r(s)}, {_r(t)})")
    return " + ".join(parts)


@dataclass(frozen=True)
class Family:
    name: str
    build: Callable[[np.random.Generator], str]
    props: tuple[str, ...]
    note: str = ""


FAMILIES: dict[str, Family] = {f.name: f for f in (
    Family("nonneg-nondecreasing", _nonneg_nondecreasing,
           ("non-negative", "monotone-nondecreasing"),
           "positive combination of min(x,c), 1-exp(-lam x), x^b with b in (0,2]"),
    Family("positive-nondecreasing", _positive_nondecreasing,
           ("positive", "monotone-nondecreasing"),
           "positive constant plus a nonneg-nondecreasing combination"),
    Family("positive-ratio-nonincreasing", _ratio_nonincreasing,
           ("positive", "ratio-x-over-g-nonincreasing"),
           "c x^gamma with gamma in [1,2]"),
    Family("convex-submultiplicative-zero-at-zero", _convex_submultiplicative,
           ("non-negative", "monotone-nondecreasing", "convex", "submultiplicative",
            "zero-at-zero"),
           "x^p or x^p1 + x^p2 with exponents in [1,4]"),
    Family("positive-nonincreasing", _positive_nonincreasing,
           ("positive", "monotone-nonincreasing"),
           "c0 + c1 exp(-lam x) + c2 (1+x)^(-b)"),
    Family("bounded-nondecreasing", _bounded_nondecreasing,
           ("non-negative", "positive", "monotone-nondecreasing"),
           "positive combination of min(x,c) and 1-exp(-lam x); vanishes at 0, bounded"),
    Family("window-constant", _window_constant, ("non-negative",),
           "c on a window [s,t], zero elsewhere"),
    Family("nonneg-integrable", _nonneg_integrable, ("non-negative",),
           "c exp(-lam x) plus an optional truncated power"),
)}


def sample_admissible(family: str, seed) -> FunctionSpec:
    """Draw a certified member of ``family``; deterministic in ``seed``.

    >>> sample_admissible("positive-ratio-nonincreasing", 7).declared_props >= {"positive"}
    True
    """
    from ..hypotheses import check_property

    try:
        fam = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}") from None
    rng = np.random.default_rng(seed)
    last = None
    for _ in range(MAX_TRIES):
        expr = parse(fam.build(rng))
        spec = FunctionSpec(expr, declared_props=frozenset(fam.props))
        certs = tuple(check_property(spec, p) for p in fam.props)
        if all(c.passed for c in certs):
            return FunctionSpec(expr, spec.domain, spec.declared_props, certs)
        last = next(c for c in certs if not c.passed)
    raise SamplingError(f"no admissible {family} sample after {MAX_TRIES} tries "
                        f"(last failure: {last.property} {last.status.value})")
