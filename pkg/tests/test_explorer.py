import math
import warnings

import numpy as np
import pytest

from hardycheck import explorer
from hardycheck.catalog import Params
from hardycheck.explorer import (FAMILIES, OptimizerOptions, ParamFamily, RatioAboveOneWarning,
                                 hardy_p2_oracle, maximize_ratio, sharpness_sweep)
from hardycheck.quadrature import Interval
from hardycheck.verifier import Outcome

GRID = [10.0 ** k for k in range(1, 7)]


def _ratio_oracle(T):
    # independent of hardy_p2_oracle: expand lhs/(4 ln T) term by term
    s, L = math.sqrt(T), math.log(T)
    return 1 - (4 * (1 - 1 / s) - (1 - 1 / T) - (s - 1) ** 2 / T) / L


@pytest.fixture(scope="module")
def sweep():
    return sharpness_sweep(2.0, GRID)


def test_oracle_agrees_with_expansion():
    for T in GRID:
        lhs, rhs = hardy_p2_oracle(T)
        assert lhs / rhs == pytest.approx(_ratio_oracle(T), rel=1e-14)


def test_sweep_matches_oracle(sweep):
    for T, r in sweep.rows():
        assert r == pytest.approx(_ratio_oracle(T), rel=1e-4)
    assert sweep.max_oracle_rel_err < 1e-4


def test_sweep_strictly_increasing(sweep):
    assert all(b > a for a, b in zip(sweep.ratio, sweep.ratio[1:]))


def test_sweep_reaches_085(sweep):
    assert sweep.ratio[-1] >= 0.85
    assert sweep.ratio[-1] == pytest.approx(1 - 2 / math.log(1e6), abs=0.01)
    # lhs over int f^2 = ln T
    assert sweep.lhs[-1] / math.log(1e6) >= 3.4


def test_sweep_fits(sweep):
    assert 0 < sweep.c_unit < 3
    assert sweep.asymptote < 1
    d = sweep.to_dict()
    assert d["unit_fit"]["model"] == "1 - c/ln(T)"


def test_sweep_near_one_vanishes():
    r = sharpness_sweep(2.0, [1.0001]).ratio[0]
    assert 0 <= r < 1e-3


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_sweep_other_p_below_one(p):
    res = sharpness_sweep(p, [10.0, 1e3, 1e5])
    assert res.oracle_ratio is None
    assert all(0 < r < 1 for r in res.ratio)
    assert all(b > a for a, b in zip(res.ratio, res.ratio[1:]))


@pytest.mark.parametrize("p, grid", [(1.0, GRID), (2.0, [0.5, 10]), (2.0, [100, 10]), (2.0, [])])
def test_sweep_rejects_bad_input(p, grid):
    with pytest.raises(ValueError):
        sharpness_sweep(p, grid)


# optimizer --------------------------------------------------------------

@pytest.fixture(scope="module")
def trace_p2():
    return maximize_ratio("hardy", Params(p=2), "trunc-power", seed=0)


def test_optimizer_finds_extremal_exponent(trace_p2):
    alpha, T = trace_p2.best_params
    assert alpha == pytest.approx(-0.5, abs=0.05)
    assert trace_p2.best_ratio >= 0.85


def test_optimizer_at_least_matches_sweep(trace_p2, sweep):
    assert trace_p2.best_ratio >= max(sweep.ratio) - 1e-9


def test_optimizer_never_certifies_crossing_one(trace_p2):
    assert all(r <= 1 for _, r in trace_p2.iterates)
    assert not trace_p2.diagnostics
    best = trace_p2.best_so_far
    assert all(b >= a for a, b in zip(best, best[1:]))


def test_optimizer_p15():
    tr = maximize_ratio("hardy", Params(p=1.5), "trunc-power", OptimizerOptions(starts=2), seed=1)
    assert 0.8 < tr.best_ratio < 1


def test_optimizer_flat_constant_family():
    tr = maximize_ratio("hardy-finite", Params(p=2, interval=Interval(1, 2)), "constant",
                        OptimizerOptions(starts=2, max_evals=20), seed=0)
    ratios = np.array([r for _, r in tr.iterates])
    assert np.ptp(ratios) < 1e-9 * ratios.max()


def test_optimizer_deterministic():
    opts = OptimizerOptions(starts=2, max_evals=15)
    a = maximize_ratio("hardy", Params(p=2), "exp-decay", opts, seed=5)
    b = maximize_ratio("hardy", Params(p=2), "exp-decay", opts, seed=5)
    assert a.to_dict() == b.to_dict()


def test_optimizer_all_uncertifiable():
    neg = ParamFamily("negative", ("c",), ((0.1, 1.0),), lambda v: {"f": f"-{v[0]!r}"})
    with pytest.raises(RuntimeError, match="uncertifiable"):
        maximize_ratio("hardy", Params(p=2), neg, OptimizerOptions(starts=1, max_evals=5))


def test_optimizer_rejects_reverse_entry():
    with pytest.raises(ValueError):
        maximize_ratio("thm38", Params(interval=Interval(1, 2)), "constant")


def test_ratio_above_one_is_loud(monkeypatch):
    real = explorer.verify

    def inflated(task):
        v = real(task)
        return type(v)(**{**v.__dict__, "ratio": 1.2, "outcome": Outcome.INCONCLUSIVE})

    monkeypatch.setattr(explorer, "verify", inflated)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tr = maximize_ratio("hardy", Params(p=2), "exp-decay",
                            OptimizerOptions(starts=1, max_evals=3))
    assert any(issubclass(w.category, RatioAboveOneWarning) for w in caught)
    assert tr.diagnostics and tr.best_ratio == 1.2


def test_family_bounds():
    fam = FAMILIES["trunc-power"].with_bounds([(-0.6, -0.4), (100, 1000)])
    assert fam.bounds[1] == (100, 1000)
    np.testing.assert_allclose(fam.from_search(fam.to_search([-0.5, 300.0])), [-0.5, 300.0])
    with pytest.raises(ValueError):
        FAMILIES["constant"].with_bounds([(2.0, 1.0)])
