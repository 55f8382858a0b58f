import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycheck.functions import (FAMILIES, Add, Const, CumulativeDivergenceError,
                                  EvaluationError, Exp, FunctionSpec, Log, Max, Min, Mul,
                                  ParseError, Pow, SamplingError, Scale, Trunc, X, cumulative,
                                  evaluate, parse, render, sample_admissible)
from hardycheck.functions.cumulative import breakpoints
from hardycheck.hypotheses import check_property
from hardycheck.quadrature import Interval, integrate


# parse ------------------------------------------------------------------

def test_parse_exp():
    e = parse("exp(-x)")
    assert isinstance(e, Exp)
    assert evaluate(e, 1.0) == pytest.approx(math.exp(-1))


def test_parse_min():
    assert isinstance(parse("min(x,1)"), Min)


def test_parse_trunc_power():
    e = parse("trunc(x^(-0.5),1,1000)")
    assert isinstance(e, Trunc)
    assert (e.lo, e.hi) == (1.0, 1000.0)
    assert isinstance(e.arg, Pow) and e.arg.exponent == -0.5


@pytest.mark.parametrize("text", ["exp(-x", "x +", "foo(x)", "min(x)", "2 $ x", "", "x x"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse("x + )")
    assert info.value.position is not None


@pytest.mark.parametrize("text, x, want", [
    ("2*x + 3", 2.0, 7.0),
    ("x/4", 2.0, 0.5),
    ("-x^2", 3.0, -9.0),
    ("max(x, 2) - min(x, 2)", 5.0, 3.0),
    ("log(exp(x))", 1.7, 1.7),
    ("1 - exp(-2*x)", 0.5, 1 - math.exp(-1)),
])
def test_parse_arithmetic(text, x, want):
    assert evaluate(parse(text), x) == pytest.approx(want, rel=1e-14)


# evaluate ---------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(parse("x^2"), 3.0) == 9.0
    assert evaluate(parse("min(x,1)"), 2.0) == 1.0
    assert evaluate(parse("trunc(x^(-1/2), 1, 100)"), 0.5) == 0.0


def test_evaluate_vectorized_shape():
    x = np.linspace(0.1, 3, 12).reshape(3, 4)
    y = evaluate(parse("x*exp(-x)"), x)
    assert y.shape == (3, 4)
    np.testing.assert_allclose(y, x * np.exp(-x))


def test_evaluate_nonfinite_names_node():
    with pytest.raises(EvaluationError) as info:
        evaluate(parse("1 + log(x)"), 0.0)
    assert info.value.path == "Add/right"
    assert "log(x)" in str(info.value)


# round trip -------------------------------------------------------------

consts = st.floats(-50, 50, allow_nan=False).filter(lambda v: v != 0)
pos = st.floats(0.01, 50)


def _exprs():
    leaves = st.one_of(st.just(X), consts.map(Const))

    def grow(children):
        return st.one_of(
            st.tuples(children, children).map(lambda t: Add(*t)),
            # the parser folds constant factors into Scale, so Mul never holds a bare Const
            st.tuples(children, children)
              .filter(lambda t: not any(isinstance(c, Const) for c in t))
              .map(lambda t: Mul(*t)),
            st.tuples(consts, children).map(lambda t: Scale(*t)),
            st.tuples(children, st.floats(-3, 3)).map(lambda t: Pow(*t)),
            children.map(Exp),
            children.map(Log),
            st.tuples(children, children).map(lambda t: Min(*t)),
            st.tuples(children, children).map(lambda t: Max(*t)),
            st.tuples(children, pos, pos).filter(lambda t: t[1] < t[2])
              .map(lambda t: Trunc(*t)),
        )

    return st.recursive(leaves, grow, max_leaves=8)


@settings(max_examples=200)
@given(_exprs())
def test_parse_render_round_trip(e):
    assert parse(render(e)) == e


@settings(max_examples=60)
@given(_exprs(), st.floats(0.05, 20))
def test_round_trip_evaluates_identically(e, x):
    a = parse(render(e))
    with np.errstate(all="ignore"):
        va, vb = a._eval(np.array([x])), e._eval(np.array([x]))
    np.testing.assert_array_equal(va, vb)


# cumulative -------------------------------------------------------------

XS = np.array([1e-6, 0.3, 1.0, 2.5, 17.0, 400.0])


def test_cumulative_exp():
    F = cumulative(parse("exp(-x)"))
    assert F.form == "closed"
    np.testing.assert_allclose(F(XS), -np.expm1(-XS), rtol=1e-13)


def test_cumulative_min():
    F = cumulative(parse("min(x,1)"))
    want = np.where(XS <= 1, XS ** 2 / 2, XS - 0.5)
    np.testing.assert_allclose(F(XS), want, rtol=1e-13)


def test_cumulative_trunc_power():
    T = 100.0
    F = cumulative(parse(f"trunc(x^(-1/2), 1, {T})"))
    want = np.where(XS < 1, 0.0, 2 * (np.sqrt(np.minimum(XS, T)) - 1))
    np.testing.assert_allclose(F(XS), want, rtol=1e-13, atol=1e-300)


def test_cumulative_expm1_small_x():
    # k(1 - exp(-lam x)) integrates to k(x - (1 - exp(-lam x))/lam), which cancels near 0
    F = cumulative(parse("2*(1 - exp(-3*x))"))
    x = np.array([1e-20, 1e-8, 1e-3])
    np.testing.assert_allclose(F(x), 3 * x ** 2 * (1 - x), rtol=1e-6)
    assert np.all(F(x) > 0)


def test_cumulative_divergent_names_node():
    with pytest.raises(CumulativeDivergenceError) as info:
        cumulative(parse("x^(-1.5)"))
    assert "Pow" in str(info.value) or "x" in str(info.value)


def test_cumulative_quadrature_fallback():
    F = cumulative(parse("exp(-x^2)"))
    assert F.form == "quadrature"
    assert F(np.array([50.0]))[0] == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["exp(-x^2)", "x*exp(-x)", "min(x^2, 3)", "1 - exp(-2*x)",
                        "trunc(x^(-0.5), 0.5, 7)", "log(1 + x)"]),
       st.floats(0.01, 10), st.floats(0.01, 10))
def test_cumulative_additive(text, a, b):
    a, b = min(a, b), max(a, b)
    e = parse(text)
    F = cumulative(e)
    est = integrate(lambda t: evaluate(e, t), Interval(a, b) if b > a else Interval(a, a + 1),
                    breakpoints=breakpoints(e))
    if b > a:
        assert F(b) - F(a) == pytest.approx(est.value, rel=1e-9, abs=1e-11 + est.err_bound)


def test_breakpoints_collects_kinks_and_jumps():
    assert set(breakpoints(parse("trunc(min(x, 2), 1, 5)"))) >= {1.0, 2.0, 5.0}


# sampling ---------------------------------------------------------------

@pytest.mark.parametrize("family", sorted(FAMILIES))
@pytest.mark.parametrize("seed", [0, 1, 42])
def test_sampler_self_consistent(family, seed):
    spec = sample_admissible(family, seed)
    assert isinstance(spec, FunctionSpec)
    props = FAMILIES[family].props
    for prop in props:
        assert check_property(spec, prop).passed, (family, prop, spec.text)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_sampler_deterministic(family):
    assert sample_admissible(family, 123).text == sample_admissible(family, 123).text


def test_sampler_examples():
    s = sample_admissible("nonneg-nondecreasing", 42)
    assert check_property(s, "monotone-nondecreasing").passed
    g = sample_admissible("positive-ratio-nonincreasing", 7)
    assert isinstance(g.expr, Scale) and isinstance(g.expr.arg, Pow)
    assert g.expr.arg.exponent >= 1
    phi = sample_admissible("convex-submultiplicative-zero-at-zero", 1)
    assert evaluate(phi.expr, 1e-9) <= 1e-9
    assert check_property(phi, "submultiplicative").passed


def test_sampler_unknown_family():
    with pytest.raises(ValueError):
        sample_admissible("no-such-family", 0)


def test_sampling_error_is_runtime_error():
    assert issubclass(SamplingError, RuntimeError)
