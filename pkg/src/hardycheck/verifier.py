"""Evaluate both sides of a task, issue verdicts, run suites and falsification searches."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .catalog import (CatalogError, Params, VerificationTask, get_entry, instantiate_task)
from .functions import FunctionSpec, SamplingError, sample_admissible
from .functions.cumulative import CumulativeDivergenceError
from .quadrature import IntegralEstimate, Interval, QuadOptions, QuadStatus, integrate

__all__ = [
    "Outcome", "Verdict", "TaskRecord", "SuiteReport", "FalsifyResult", "FalsifyError",
    "SAFETY_FACTOR", "verify", "batch_verify", "falsify", "DEFAULT_FAMILIES",
    "sample_trial",
]

SAFETY_FACTOR = 10.0


class Outcome:
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"
    VACUOUS = "vacuous"
    CONSTRUCTION_ERROR = "construction-error"


@dataclass(frozen=True)
class Verdict:
    entry: str
    direction: str
    params: Params
    bindings: Mapping[str, str]
    lhs: IntegralEstimate
    rhs_integral: IntegralEstimate
    constant: float
    rhs: float
    ratio: float
    slack: float
    outcome: str
    certificates: tuple = ()
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "entry": self.entry,
            "direction": self.direction,
            "params": self.params.to_dict(),
            "bindings": dict(self.bindings),
            "lhs": self.lhs.value,
            "lhs_err": self.lhs.err_bound,
            "lhs_status": self.lhs.status.value,
            "rhs_integral": self.rhs_integral.value,
            "rhs_integral_err": self.rhs_integral.err_bound,
            "rhs_status": self.rhs_integral.status.value,
            "rhs": self.rhs,
            "constant": self.constant,
            "ratio": self.ratio,
            "slack": self.slack,
            "outcome": self.outcome,
            "diagnostic": self.diagnostic,
            "certificates": [dict(c.to_dict(), slot=slot) for slot, c in self.certificates],
        }


def _compare(lhs: float, rhs: float, widen: float) -> str:
    """The ``<=`` rule: strict margin to hold, ``SAFETY_FACTOR`` margin to fail."""
    d = lhs - rhs
    if d < widen:
        return Outcome.HOLDS
    if d > SAFETY_FACTOR * widen:
        return Outcome.FAILS
    return Outcome.INCONCLUSIVE


def _outcome(direction: str, L: IntegralEstimate, R: IntegralEstimate, C: float):
    """Outcome and a diagnostic from both side estimates."""
    sign = 1.0 if direction == "<=" else -1.0
    # the side that must be the larger one
    big, small = (R, L) if direction == "<=" else (L, R)
    if big.divergent and big.value > 0:
        return Outcome.VACUOUS, "dominant side diverges"
    if small.divergent and small.value > 0:
        if big.converged:
            return Outcome.FAILS, "dominated side diverges while the dominant side is finite"
        return Outcome.INCONCLUSIVE, "dominated side diverges; dominant side unresolved"
    if not (L.converged and R.converged):
        bad = [n for n, e in (("lhs", L), ("rhs", R)) if not e.converged]
        why = "; ".join(f"{n}: {e.diagnostic or e.status.value}"
                        for n, e in (("lhs", L), ("rhs", R)) if n in bad)
        return Outcome.INCONCLUSIVE, f"quadrature not converged ({why})"
    widen = L.err_bound + C * R.err_bound
    return _compare(sign * L.value, sign * C * R.value, widen), ""


def verify(task: VerificationTask) -> Verdict:
    """Integrate both sides of ``task`` and apply the verdict rule.

    ``holds`` for a ``<=`` entry means ``lhs - C*rhs`` is below the summed
    error bounds; ``fails`` needs it to exceed them by ``SAFETY_FACTOR``.
    ``>=`` entries negate both sides and reuse the same rule.
    """
    L = integrate(task.lhs_integrand, task.domain, task.opts, task.breakpoints)
    R = integrate(task.rhs_integrand, task.domain, task.opts, task.breakpoints)
    C = task.constant
    rhs = C * R.value
    outcome, diag = _outcome(task.entry.direction, L, R, C)
    with np.errstate(all="ignore"):
        ratio = float(np.float64(L.value) / rhs) if rhs != 0 else math.nan
    with np.errstate(all="ignore"):
        slack = float(rhs - L.value if task.entry.direction == "<=" else L.value - rhs)
    return Verdict(task.entry.id, task.entry.direction, task.params, task.bindings_text(),
                   L, R, C, rhs, ratio, slack, outcome, task.certificates, diag)


# --------------------------------------------------------------------------
# suites

@dataclass(frozen=True)
class TaskRecord:
    """One suite row: a verdict, or the reason the task could not be built."""

    index: int
    entry: str
    outcome: str
    verdict: Verdict | None = None
    error: str = ""
    params: Mapping = field(default_factory=dict)
    bindings: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        if self.verdict is not None:
            return dict(self.verdict.to_dict(), index=self.index)
        return {"index": self.index, "entry": self.entry, "outcome": self.outcome,
                "error": self.error, "params": dict(self.params),
                "bindings": dict(self.bindings)}


@dataclass(frozen=True)
class SuiteReport:
    records: tuple[TaskRecord, ...]

    @property
    def counts(self) -> dict:
        return dict(sorted(Counter(r.outcome for r in self.records).items()))

    @property
    def status(self) -> str:
        """Aggregate: fails > inconclusive/vacuous/construction-error > holds."""
        if not self.records:
            return "inconclusive-empty"
        outs = {r.outcome for r in self.records}
        if Outcome.FAILS in outs:
            return Outcome.FAILS
        if outs == {Outcome.HOLDS}:
            return Outcome.HOLDS
        return Outcome.INCONCLUSIVE

    def to_dict(self) -> dict:
        return {"status": self.status, "counts": self.counts,
                "results": [r.to_dict() for r in self.records]}


@dataclass(frozen=True)
class TaskSpec:
    """An unbuilt task, so construction errors can be recorded per row."""

    entry: str
    params: Params
    bindings: Mapping
    opts: QuadOptions | None = None
    form: str = "proof"


def _run_one(i: int, item) -> TaskRecord:
    if isinstance(item, VerificationTask):
        v = verify(item)
        return TaskRecord(i, v.entry, v.outcome, v)
    try:
        task = instantiate_task(item.entry, item.params, item.bindings, item.opts, item.form)
    except (CatalogError, CumulativeDivergenceError, ValueError) as exc:
        params = item.params.to_dict() if isinstance(item.params, Params) else {}
        binds = {k: getattr(v, "text", str(v)) for k, v in item.bindings.items()}
        return TaskRecord(i, item.entry, Outcome.CONSTRUCTION_ERROR, None, str(exc),
                          params, binds)
    v = verify(task)
    return TaskRecord(i, v.entry, v.outcome, v)


def batch_verify(tasks: Sequence, workers: int = 1) -> SuiteReport:
    """Verify tasks (built ``VerificationTask`` or unbuilt ``TaskSpec``) in order.

    Construction failures are recorded as ``construction-error`` rows.  With
    ``workers > 1`` tasks run on a thread pool; rows stay in input order.
    """
    items = list(tasks)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, range(len(items)), items))
    else:
        records = [_run_one(i, t) for i, t in enumerate(items)]
    return SuiteReport(tuple(records))


# --------------------------------------------------------------------------
# falsification

class FalsifyError(RuntimeError):
    pass


def _exponent(spec: FunctionSpec, x: float) -> float:
    """Local power-law exponent ``log2(s(2x)/s(x))``."""
    y = spec(np.array([x, 2.0 * x]))
    with np.errstate(all="ignore"):
        return float(np.log2(y[1] / y[0]))


def _window(rng):
    a = float(rng.uniform(0.1, 2.0))
    return Interval(a, a + float(rng.uniform(0.5, 10.0)))


def _p_weighted(rng, specs, entry):
    """Shared sampler for the F^p/G^q entries.

    With ``g ~ x^gamma`` and ``f`` linear at 0 and bounded at infinity, both
    integrands are integrable iff ``p+1 < q(gamma+1) < 2p+1``; ``q`` is drawn
    from the inner part of that window.
    """
    gamma = _exponent(specs["g"], 1.0)
    reverse = entry != "thm31"
    p = float(rng.uniform(0.1, 0.9) if reverse else rng.uniform(1.1, 4.0))
    q = (p + 1.0 + p * float(rng.uniform(0.2, 0.8))) / (gamma + 1.0)
    if entry == "thm31":
        lo = max(0.0, (p - 2.0 * q) / (p - 1.0))
        a = lo + (1.0 - lo) * float(rng.uniform(0.05, 0.95))
    elif entry == "thm32":
        a = float(np.exp(rng.uniform(np.log(0.1), np.log(4.0))))
    else:
        a_max = min(4.0, (2.0 * q - 1.0) / (1.0 - p) - 1.0)
        if a_max <= 0:
            return None
        a = a_max * float(rng.uniform(0.05, 0.95))
    return Params(p=p, q=q, a=a)


def _p_ws(rng, specs, entry):
    # g ~ x^gamma: integrable iff 1 + 1/p < gamma < 2 + 1/p
    gamma = _exponent(specs["g"], 1.0)
    if gamma < 1.05:
        return None
    p = max(1.1, 1.2 / (gamma - 1.0)) + float(rng.uniform(0.0, 3.0))
    return Params(p=p, a=float(rng.uniform(0.05, 0.95)))


def _p_thm34(rng, specs, entry):
    # phi ~ x^r, psi ~ x^s near 0 and bounded f, g: need 2 < p < 2 + r + s
    r = _exponent(specs["phi"], 1e-4)
    s = _exponent(specs["psi"], 1e-4)
    return Params(p=2.0 + (r + s) * float(rng.uniform(0.2, 0.8)))


def _p_thm36(rng, specs, entry):
    # phi ~ x^r at infinity and bounded f: need max(1, 3 - r) < p < 3
    r = _exponent(specs["phi"], 1e3)
    lo = max(1.0, 3.0 - r)
    return Params(p=lo + (3.0 - lo) * float(rng.uniform(0.2, 0.8)),
                  q=float(rng.integers(0, 4)))


_PARAM_SAMPLERS: dict[str, Callable] = {
    "hardy": lambda rng, s, e: Params(p=float(rng.uniform(1.1, 4.0))),
    "hardy-finite": lambda rng, s, e: Params(p=float(rng.uniform(1.1, 4.0)),
                                             interval=_window(rng)),
    "ws-weighted": _p_ws,
    "thm31": _p_weighted,
    "thm32": _p_weighted,
    "thm32-statement": _p_weighted,
    "thm34": _p_thm34,
    "thm34-statement": _p_thm34,
    "thm35": lambda rng, s, e: Params(interval=Interval(0.0, float(rng.uniform(0.5, 20.0)))),
    "thm35-pow": lambda rng, s, e: Params(p=float(rng.uniform(1.0, 4.0)),
                                          interval=Interval(0.0, float(rng.uniform(0.5, 20.0)))),
    "thm36": _p_thm36,
    "thm37": lambda rng, s, e: Params(interval=_window(rng)),
    "thm38": lambda rng, s, e: Params(interval=_window(rng)),
}

_CSZ = "convex-submultiplicative-zero-at-zero"
_WEIGHTED = {"f": "bounded-nondecreasing", "g": "positive-ratio-nonincreasing"}
_QUOTIENT = {"f": "nonneg-nondecreasing", "g": "positive-nonincreasing",
             "phi": "nonneg-nondecreasing"}
_PRODUCT = {"f": "nonneg-nondecreasing", "g": "positive-nondecreasing",
            "phi": "nonneg-nondecreasing"}

DEFAULT_FAMILIES: dict[str, dict[str, str]] = {
    "hardy": {"f": "nonneg-integrable"},
    "hardy-finite": {"f": "nonneg-nondecreasing"},
    "ws-weighted": dict(_WEIGHTED),
    "thm31": dict(_WEIGHTED),
    "thm32": dict(_WEIGHTED),
    "thm32-statement": dict(_WEIGHTED),
    "thm34": {"f": "bounded-nondecreasing", "g": "bounded-nondecreasing",
              "phi": _CSZ, "psi": _CSZ},
    "thm35": dict(_QUOTIENT),
    "thm35-pow": {"f": "nonneg-nondecreasing", "g": "positive-nonincreasing"},
    "thm36": {"f": "bounded-nondecreasing", "phi": _CSZ},
    "thm37": dict(_PRODUCT),
    "thm38": dict(_PRODUCT, phi="positive-nonincreasing"),
}
DEFAULT_FAMILIES["thm34-statement"] = DEFAULT_FAMILIES["thm34"]

MAX_REJECTIONS = 20


def sample_trial(entry_id: str, families: Mapping[str, str], rng: np.random.Generator):
    """Draw certified bindings and admissible params for one trial.

    Returns ``(params, bindings)`` or raises :class:`FalsifyError` after
    ``MAX_REJECTIONS`` inadmissible draws.
    """
    sampler = _PARAM_SAMPLERS[entry_id]
    for _ in range(MAX_REJECTIONS):
        specs = {slot: sample_admissible(fam, int(rng.integers(2**62)))
                 for slot, fam in sorted(families.items())}
        params = sampler(rng, specs, entry_id)
        if params is None:
            continue
        return params, specs
    raise FalsifyError(f"no admissible parameters for {entry_id} after {MAX_REJECTIONS} draws")


@dataclass(frozen=True)
class FalsifyResult:
    entry: str
    direction: str
    trials: int
    seed: int
    families: Mapping[str, str]
    worst: Verdict | None
    counts: Mapping[str, int]
    verdicts: tuple[Verdict, ...] = field(default=(), repr=False)
    rejected: int = 0

    @property
    def worst_ratio(self) -> float:
        return self.worst.ratio if self.worst is not None else math.nan

    def to_dict(self) -> dict:
        return {
            "entry": self.entry,
            "direction": self.direction,
            "trials": self.trials,
            "seed": self.seed,
            "families": dict(self.families),
            "counts": dict(self.counts),
            "rejected": self.rejected,
            "worst_ratio": self.worst_ratio,
            "worst": self.worst.to_dict() if self.worst is not None else None,
        }


def falsify(entry_id: str, families: Mapping[str, str] | None = None, trials: int = 100,
            seed: int = 0, opts: QuadOptions | None = None, form: str = "proof",
            keep_verdicts: bool = False) -> FalsifyResult:
    """Random search for the worst ratio of an entry.

    Each trial draws certified functions from ``families`` (per slot) and
    admissible parameters, then verifies.  The worst case is the largest
    ratio for ``<=`` entries and the smallest for ``>=`` entries, among
    trials that reached a finite ratio.  Deterministic in ``seed``.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    entry = get_entry(entry_id, form)
    fams = dict(DEFAULT_FAMILIES[entry.id])
    if families:
        unknown = set(families) - set(entry.slots)
        if unknown:
            raise CatalogError(f"{entry.id} has no slot(s) {', '.join(sorted(unknown))}")
        fams.update(families)
    sign = 1.0 if entry.direction == "<=" else -1.0
    counts: Counter = Counter()
    verdicts = []
    worst, rejected = None, 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        try:
            params, specs = sample_trial(entry.id, fams, rng)
        except (FalsifyError, SamplingError):
            rejected += 1
            continue
        try:
            task = instantiate_task(entry_id, params, specs, opts, form)
        except (CatalogError, CumulativeDivergenceError):
            rejected += 1
            continue
        v = verify(task)
        counts[v.outcome] += 1
        if keep_verdicts:
            verdicts.append(v)
        if v.outcome == Outcome.VACUOUS or math.isnan(v.ratio):
            continue
        if worst is None or sign * v.ratio > sign * worst.ratio:
            worst = v
    if sum(counts.values()) == 0:
        raise FalsifyError(f"no admissible samples for {entry.id} in {trials} trials")
    return FalsifyResult(entry.id, entry.direction, trials, seed, fams, worst,
                         dict(sorted(counts.items())), tuple(verdicts), rejected)
