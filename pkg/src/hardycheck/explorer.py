"""Sharpness exploration: extremal-family sweeps and ratio maximization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .catalog import CatalogError, Params, get_entry, instantiate_task
from .functions.cumulative import CumulativeDivergenceError
from .quadrature import QuadOptions
from .verifier import Outcome, Verdict, verify

__all__ = [
    "SweepResult", "sharpness_sweep", "hardy_p2_oracle", "ParamFamily", "FAMILIES",
    "OptimizerOptions", "OptimizationTrace", "maximize_ratio", "RatioAboveOneWarning",
]


class RatioAboveOneWarning(RuntimeWarning):
    """A ``<=`` entry produced a ratio above 1 beyond its error bars."""


# --------------------------------------------------------------------------
# sweep

def hardy_p2_oracle(T):
    """Closed-form ``(lhs, rhs)`` for ``f = trunc(x^-1/2, 1, T)`` at ``p = 2``.

    ``rhs`` includes the constant 4, so ``lhs / rhs`` is the normalized ratio.
    """
    T = np.asarray(T, dtype=float)
    s = np.sqrt(T)
    lhs = 4.0 * (np.log(T) - 4.0 * (1.0 - 1.0 / s) + (1.0 - 1.0 / T) + (s - 1.0) ** 2 / T)
    return lhs, 4.0 * np.log(T)


@dataclass(frozen=True)
class SweepResult:
    p: float
    T: tuple[float, ...]
    ratio: tuple[float, ...]
    lhs: tuple[float, ...]
    rhs: tuple[float, ...]
    asymptote: float
    c: float
    c_unit: float
    oracle_ratio: tuple[float, ...] | None = None
    verdicts: tuple[Verdict, ...] = field(default=(), repr=False)

    @property
    def max_oracle_rel_err(self) -> float:
        if self.oracle_ratio is None:
            return math.nan
        r, o = np.array(self.ratio), np.array(self.oracle_ratio)
        return float(np.max(np.abs(r - o) / np.abs(o)))

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.T, self.ratio))

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "T": list(self.T),
            "ratio": list(self.ratio),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "fit": {"model": "A - c/ln(T)", "A": self.asymptote, "c": self.c},
            "unit_fit": {"model": "1 - c/ln(T)", "c": self.c_unit},
        }
        if self.oracle_ratio is not None:
            out["oracle_ratio"] = list(self.oracle_ratio)
            out["max_oracle_rel_err"] = self.max_oracle_rel_err
        return out


def _fit_asymptote(T, ratio):
    """Least-squares fit ``ratio ~ A - c / ln T``; needs two distinct points."""
    u = 1.0 / np.log(np.asarray(T))
    if len(u) < 2:
        return math.nan, math.nan
    slope, intercept = np.polyfit(u, np.asarray(ratio), 1)
    return float(intercept), float(-slope)


def _fit_unit(T, ratio):
    """Least-squares ``c`` in ``ratio ~ 1 - c / ln T``."""
    u = 1.0 / np.log(np.asarray(T))
    return float(np.dot(u, 1.0 - np.asarray(ratio)) / np.dot(u, u))


def sharpness_sweep(p: float, T_grid: Sequence[float], opts: QuadOptions | None = None
                    ) -> SweepResult:
    """Ratio of the classical entry along ``f_T = trunc(x^(-1/p), 1, T)``.

    At ``p = 2`` the quadrature ratios are also compared with the closed
    form of :func:`hardy_p2_oracle` (``oracle_ratio``).
    """
    T = [float(t) for t in T_grid]
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not T or any(t <= 1 for t in T) or any(b <= a for a, b in zip(T, T[1:])):
        raise ValueError("T_grid must be a non-empty increasing sequence in (1, inf)")
    verdicts = []
    for t in T:
        task = instantiate_task("hardy", Params(p=p), {"f": f"trunc(x^(-1/{p!r}), 1, {t!r})"},
                                opts)
        verdicts.append(verify(task))
    ratio = [v.ratio for v in verdicts]
    A, c = _fit_asymptote(T, ratio)
    oracle = None
    if p == 2:
        lhs, rhs = hardy_p2_oracle(T)
        oracle = tuple(float(r) for r in lhs / rhs)
    return SweepResult(p, tuple(T), tuple(ratio), tuple(v.lhs.value for v in verdicts),
                       tuple(v.rhs for v in verdicts), A, c, _fit_unit(T, ratio), oracle,
                       tuple(verdicts))


# --------------------------------------------------------------------------
# optimizer

@dataclass(frozen=True)
class ParamFamily:
    """A box-bounded family of slot bindings.

    ``build`` maps the natural parameter vector to slot expressions; ``log``
    marks coordinates searched in log10 space.
    """

    name: str
    names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    build: Callable[[np.ndarray], dict]
    log: tuple[bool, ...] = ()

    def __post_init__(self):
        if not self.log:
            object.__setattr__(self, "log", (False,) * len(self.names))
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty parameter box in family {self.name}")

    def with_bounds(self, bounds) -> "ParamFamily":
        return ParamFamily(self.name, self.names, tuple(map(tuple, bounds)), self.build,
                           self.log)

    def to_search(self, v):
        return np.array([math.log10(x) if lg else x for x, lg in zip(v, self.log)])

    def from_search(self, u):
        return np.array([10.0 ** x if lg else x for x, lg in zip(u, self.log)])


FAMILIES: dict[str, ParamFamily] = {f.name: f for f in (
    ParamFamily("trunc-power", ("alpha", "T"), ((-0.9, -0.1), (10.0, 1e6)),
                lambda v: {"f": f"trunc(x^({v[0]!r}), 1, {v[1]!r})"}, (False, True)),
    ParamFamily("constant", ("c",), ((0.1, 10.0),), lambda v: {"f": f"{v[0]!r}"}, (True,)),
    ParamFamily("exp-decay", ("lam",), ((0.1, 10.0),),
                lambda v: {"f": f"exp(-{v[0]!r}*x)"}, (True,)),
)}


@dataclass(frozen=True)
class OptimizerOptions:
    starts: int = 4
    max_evals: int = 150
    xatol: float = 1e-4
    fatol: float = 1e-7


@dataclass(frozen=True)
class OptimizationTrace:
    entry: str
    family: str
    names: tuple[str, ...]
    iterates: tuple[tuple[tuple[float, ...], float], ...]
    best_params: tuple[float, ...]
    best_ratio: float
    evaluations: int
    termination: str
    diagnostics: tuple[str, ...] = ()

    @property
    def best_so_far(self) -> list[float]:
        return list(np.maximum.accumulate([r for _, r in self.iterates]))

    def to_dict(self) -> dict:
        return {
            "entry": self.entry,
            "family": self.family,
            "names": list(self.names),
            "iterates": [{"params": list(v), "ratio": r} for v, r in self.iterates],
            "best_params": dict(zip(self.names, self.best_params)),
            "best_ratio": self.best_ratio,
            "evaluations": self.evaluations,
            "termination": self.termination,
            "diagnostics": list(self.diagnostics),
        }


def maximize_ratio(entry_id: str, params: Params, family: ParamFamily | str,
                   opts: OptimizerOptions | None = None, seed: int = 0,
                   quad: QuadOptions | None = None) -> OptimizationTrace:
    """Multistart Nelder-Mead on ``-ratio`` over the family's box.

    Starts are a scrambled Halton sequence seeded by ``seed``.  Candidates
    whose task cannot be built (a refuted hypothesis, say) or whose verdict
    has no finite ratio score ``-inf``.  A ratio above 1 beyond the error
    bars of a ``<=`` entry raises :class:`RatioAboveOneWarning` and is kept.
    """
    entry = get_entry(entry_id)
    if entry.direction != "<=":
        raise ValueError("maximize_ratio targets <= entries")
    fam = FAMILIES[family] if isinstance(family, str) else family
    opts = opts or OptimizerOptions()
    lo = fam.to_search([b[0] for b in fam.bounds])
    hi = fam.to_search([b[1] for b in fam.bounds])
    iterates: list[tuple[tuple[float, ...], float]] = []
    diagnostics: list[str] = []

    def ratio_at(u):
        v = [float(x) for x in fam.from_search(np.clip(u, lo, hi))]
        try:
            task = instantiate_task(entry_id, params, fam.build(v), quad)
        except (CatalogError, CumulativeDivergenceError):
            r = -math.inf
        else:
            verdict = verify(task)
            r = verdict.ratio if verdict.outcome != Outcome.VACUOUS else -math.inf
            if not math.isfinite(r):
                r = -math.inf
            elif r > 1 and verdict.outcome != Outcome.HOLDS:
                msg = (f"ratio {r!r} > 1 for {entry_id} at "
                       f"{dict(zip(fam.names, v))}")
                warnings.warn(msg, RatioAboveOneWarning, stacklevel=3)
                diagnostics.append(msg)
        iterates.append((tuple(float(x) for x in v), float(r)))
        return r

    starts = qmc.scale(qmc.Halton(d=len(lo), scramble=True, seed=seed).random(opts.starts),
                       lo, hi)
    best_r, reason = -math.inf, "no start produced a finite ratio"
    for u0 in starts:
        res = minimize(lambda u: -ratio_at(u), u0, method="Nelder-Mead",
                       bounds=list(zip(lo, hi)),
                       options={"maxfev": opts.max_evals, "xatol": opts.xatol,
                                "fatol": opts.fatol})
        r = -float(res.fun)
        if r > best_r:
            best_r, reason = r, str(res.message)
    if not math.isfinite(best_r):
        raise RuntimeError(f"maximize_ratio: every start of {fam.name} was uncertifiable")
    # report the best evaluated candidate, which is what the iterates contain
    best_i = int(np.argmax([r for _, r in iterates]))
    return OptimizationTrace(entry_id, fam.name, fam.names, tuple(iterates),
                             iterates[best_i][0], iterates[best_i][1], len(iterates),
                             reason, tuple(diagnostics))
