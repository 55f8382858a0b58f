import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycheck.quadrature import (Interval, QuadOptions, QuadStatus, classify_head,
                                   classify_tail, integrate)

INF = math.inf


def _hardy_trunc_p2(T):
    # int_1^inf (F/x)^2 dx for f = x^-1/2 on [1, T]: F = 2(sqrt(x) - 1) up to T, then flat
    s = math.sqrt(T)
    return 4 * (math.log(T) - 4 * (1 - 1 / s) + (1 - 1 / T) + (s - 1) ** 2 / T)


def _hardy_trunc_integrand(T):
    def f(x):
        F = 2 * (np.sqrt(np.minimum(x, T)) - 1)
        return (F / x) ** 2
    return f


# closed forms; the oracle column never touches the quadrature code
CORPUS = [
    ("x^2 on (0,1)", lambda x: x ** 2, Interval(0, 1), 1 / 3, ()),
    ("exp(-x)", lambda x: np.exp(-x), Interval(0), 1.0, ()),
    ("(1-exp(-x))^2/x^2", lambda x: (-np.expm1(-x)) ** 2 / x ** 2, Interval(0), 2 * math.log(2), ()),
    ("x^-1/2 on (0,1)", lambda x: x ** -0.5, Interval(0, 1), 2.0, ()),
    ("log x on (0,1)", np.log, Interval(0, 1), -1.0, ()),
    ("1/(1+x^2)", lambda x: 1 / (1 + x ** 2), Interval(0), math.pi / 2, ()),
    ("x^-2 on (1,inf)", lambda x: x ** -2.0, Interval(1), 1.0, ()),
    ("x^-1.5 on (1,inf)", lambda x: x ** -1.5, Interval(1), 2.0, ()),
    ("x exp(-x)", lambda x: x * np.exp(-x), Interval(0), 1.0, ()),
    ("exp(-x^2)", lambda x: np.exp(-x * x), Interval(0), math.sqrt(math.pi) / 2, ()),
    ("x^-0.3 exp(-x)", lambda x: x ** -0.3 * np.exp(-x), Interval(0), math.gamma(0.7), ()),
    ("1/(x(1+x)) on (1,inf)", lambda x: 1 / (x * (1 + x)), Interval(1), math.log(2), ()),
    ("hardy trunc T=1e4", _hardy_trunc_integrand(1e4), Interval(1), _hardy_trunc_p2(1e4), (1e4,)),
    ("hardy trunc T=1e6", _hardy_trunc_integrand(1e6), Interval(1), _hardy_trunc_p2(1e6), (1e6,)),
    ("step on (0,3)", lambda x: np.where(x < 1.5, 1.0, 2.0), Interval(0, 3), 4.5, (1.5,)),
]


@pytest.mark.parametrize("name, f, iv, exact, bps", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_matches_closed_form(name, f, iv, exact, bps):
    est = integrate(f, iv, breakpoints=bps)
    assert est.status is QuadStatus.CONVERGED, est.diagnostic
    assert abs(est.value - exact) <= 1e-8 * abs(exact)
    # the reported bound must cover the true error
    assert abs(est.value - exact) <= est.err_bound + 1e-15


def test_corpus_size():
    assert len(CORPUS) >= 10


@pytest.mark.parametrize("f, iv, sign", [
    (lambda x: 1 / x, Interval(1), 1),
    (lambda x: x ** -0.5, Interval(1), 1),
    (lambda x: -1 / x, Interval(2), -1),
    (lambda x: 1 / x, Interval(0, 1), 1),
    (lambda x: x ** -1.5, Interval(0, 1), 1),
])
def test_divergent_flagged(f, iv, sign):
    est = integrate(f, iv)
    assert est.status is QuadStatus.DIVERGENT
    assert est.value == sign * INF


def test_classify_tail_examples():
    t = classify_tail(lambda x: x ** -2.0, 1.0)
    assert t.verdict == "integrable"
    assert t.exponent == pytest.approx(-2, abs=0.05)
    t = classify_tail(lambda x: 1 / x, 1.0)
    assert t.verdict == "divergent"
    assert t.exponent == pytest.approx(-1, abs=0.05)
    t = classify_tail(lambda x: np.exp(-x), 1.0)
    assert t.verdict == "integrable" and t.super_polynomial


def test_classify_tail_mixed_sign_inconclusive():
    t = classify_tail(lambda x: np.sin(x) / x, 1.0)
    assert t.verdict == "inconclusive"


def test_classify_head():
    assert classify_head(lambda x: x ** -0.5, 1.0).verdict == "integrable"
    assert classify_head(lambda x: 1 / x, 1.0).verdict == "divergent"


def test_nonfinite_interior_is_inconclusive():
    est = integrate(lambda x: np.where(np.abs(x - 0.3) < 0.05, np.nan, 1.0), Interval(0, 1))
    assert est.status is QuadStatus.INCONCLUSIVE
    assert est.diagnostic


def test_budget_exhaustion_is_inconclusive():
    est = integrate(lambda x: np.sin(1 / x), Interval(0, 1), QuadOptions(max_evals=200))
    assert est.status is QuadStatus.INCONCLUSIVE


def test_deterministic():
    f = CORPUS[2][1]
    assert integrate(f, Interval(0)) == integrate(f, Interval(0))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Interval(2, 1)
    with pytest.raises(ValueError):
        Interval(-1, 1)
    with pytest.raises(ValueError):
        QuadOptions(abs_tol=0)
    with pytest.raises(ValueError):
        classify_tail(lambda x: x, 0.0)


# properties ------------------------------------------------------------

lams = st.floats(0.2, 5.0)
betas = st.floats(-0.6, 2.0)


def _fam(lam, beta):
    return lambda x: x ** beta * np.exp(-lam * x)


@settings(max_examples=30, deadline=None)
@given(lams, betas, st.floats(0.05, 0.95), st.floats(0.5, 20.0))
def test_additivity(lam, beta, frac, c):
    f = _fam(lam, beta)
    b = frac * c
    whole = integrate(f, Interval(0, c))
    left, right = integrate(f, Interval(0, b)), integrate(f, Interval(b, c))
    slack = whole.err_bound + left.err_bound + right.err_bound
    assert abs(whole.value - (left.value + right.value)) <= slack + 1e-12 * abs(whole.value)


@settings(max_examples=30, deadline=None)
@given(lams, betas, lams, betas, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(l1, b1, l2, b2, alpha, beta):
    f, g = _fam(l1, b1), _fam(l2, b2)
    iv = Interval(0)
    lin = integrate(lambda x: alpha * f(x) + beta * g(x), iv)
    If, Ig = integrate(f, iv), integrate(g, iv)
    assert lin.converged and If.converged and Ig.converged
    exp = alpha * If.value + beta * Ig.value
    tol = (lin.err_bound + abs(alpha) * If.err_bound + abs(beta) * Ig.err_bound
           + 1e-8 * (abs(alpha * If.value) + abs(beta * Ig.value)))
    assert abs(lin.value - exp) <= tol


@settings(max_examples=30, deadline=None)
@given(lams, betas, st.floats(0.0, 2.0))
def test_monotonicity(lam, beta, bump):
    g = _fam(lam, beta)
    f = lambda x: g(x) + bump * np.exp(-x)  # noqa: E731  f >= g pointwise
    If, Ig = integrate(f, Interval(0)), integrate(g, Interval(0))
    assert If.value >= Ig.value - If.err_bound - Ig.err_bound
