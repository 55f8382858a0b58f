"""Command-line front end.

Exit codes: 0 every verdict holds (or a sweep/optimization completed),
1 at least one verdict fails, 2 inconclusive, vacuous or empty results with
no failure, 3 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import catalog, explorer, verifier
from .catalog import CatalogError, Params
from .functions import FAMILIES as SAMPLER_FAMILIES, ParseError, parse, render, sample_admissible
from .functions.cumulative import CumulativeDivergenceError
from .hypotheses import CertStatus, PremiseError, verify_ratio_lemma
from .quadrature import Interval, QuadOptions
from .report import ReportError, emit_report

EXIT_HOLDS, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
ENV_ABS, ENV_REL = "HARDYCHECK_ABS_TOL", "HARDYCHECK_REL_TOL"
SLOTS = ("f", "g", "phi", "psi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# configuration

RUN_KEYS = {
    "verify": {"kind", "entry", "form", "params", "slots", "quad", "outputs"},
    "falsify": {"kind", "entry", "form", "params", "families", "trials", "seed", "quad",
                "outputs"},
}
PARAM_KEYS = {"p", "q", "a", "interval"}
QUAD_KEYS = {"abs_tol", "rel_tol", "max_evals", "tail_split"}
OUTPUT_KEYS = {"json", "csv"}


class ConfigError(ValueError):
    pass


def _unknown(where: str, got, allowed):
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def _number(where, v):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {v!r}") from None


def default_quad() -> dict:
    """Quadrature defaults, overridable through the environment."""
    q = {"abs_tol": QuadOptions.abs_tol, "rel_tol": QuadOptions.rel_tol,
         "max_evals": QuadOptions.max_evals, "tail_split": QuadOptions.tail_split}
    for key, env in (("abs_tol", ENV_ABS), ("rel_tol", ENV_REL)):
        if os.environ.get(env):
            q[key] = _number(env, os.environ[env])
    return q


def _quad(where, d) -> QuadOptions:
    d = dict(default_quad(), **(d or {}))
    _unknown(f"{where}.quad", d, QUAD_KEYS)
    try:
        return QuadOptions(abs_tol=_number(f"{where}.quad.abs_tol", d["abs_tol"]),
                           rel_tol=_number(f"{where}.quad.rel_tol", d["rel_tol"]),
                           max_evals=int(d["max_evals"]),
                           tail_split=_number(f"{where}.quad.tail_split", d["tail_split"]))
    except ValueError as exc:
        raise ConfigError(f"{where}.quad: {exc}") from None


def _params(where, d) -> Params:
    d = d or {}
    if not isinstance(d, dict):
        raise ConfigError(f"{where}.params: expected a mapping")
    _unknown(f"{where}.params", d, PARAM_KEYS)
    iv = None
    if d.get("interval") is not None:
        lohi = d["interval"]
        if not (isinstance(lohi, (list, tuple)) and len(lohi) == 2):
            raise ConfigError(f"{where}.params.interval: expected [lo, hi]")
        try:
            iv = Interval(_number(f"{where}.params.interval", lohi[0]),
                          _number(f"{where}.params.interval", lohi[1]))
        except ValueError as exc:
            raise ConfigError(f"{where}.params.interval: {exc}") from None
    return Params(**{k: _number(f"{where}.params.{k}", d[k]) for k in ("p", "q", "a")
                     if d.get(k) is not None}, interval=iv)


def validate_config(cfg) -> list[dict]:
    """Check a parsed config document; return its normalized runs."""
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a mapping with a 'runs' list")
    _unknown("config", cfg, {"schema_version", "runs"})
    runs = cfg.get("runs")
    if not isinstance(runs, list):
        raise ConfigError("config.runs: expected a list")
    out = []
    for i, run in enumerate(runs):
        where = f"runs[{i}]"
        if not isinstance(run, dict):
            raise ConfigError(f"{where}: expected a mapping")
        kind = run.get("kind", "verify")
        if kind not in RUN_KEYS:
            raise ConfigError(f"{where}.kind: expected verify or falsify, got {kind!r}")
        _unknown(where, run, RUN_KEYS[kind])
        if "entry" not in run:
            raise ConfigError(f"{where}.entry: missing")
        form = run.get("form", "proof")
        try:
            entry = catalog.get_entry(run["entry"], form)
        except CatalogError as exc:
            raise ConfigError(f"{where}.entry: {exc}") from None
        norm = {"kind": kind, "entry": run["entry"], "form": form,
                "params": _params(where, run.get("params")),
                "quad": _quad(where, run.get("quad"))}
        outputs = run.get("outputs") or {}
        _unknown(f"{where}.outputs", outputs, OUTPUT_KEYS)
        norm["outputs"] = dict(outputs)
        if kind == "verify":
            slots = run.get("slots") or {}
            _unknown(f"{where}.slots", slots, entry.slots)
            parsed = {}
            for s, text in slots.items():
                try:
                    parsed[s] = parse(str(text))
                except ParseError as exc:
                    raise ConfigError(f"{where}.slots.{s}: {exc}") from None
            norm["slots"] = parsed
        else:
            fams = run.get("families") or {}
            _unknown(f"{where}.families", fams, entry.slots)
            for s, fam in fams.items():
                if fam not in SAMPLER_FAMILIES:
                    raise ConfigError(f"{where}.families.{s}: unknown family {fam!r}")
            if "seed" not in run:
                raise ConfigError(f"{where}.seed: falsify runs require a seed")
            norm["families"] = dict(fams)
            norm["trials"] = int(run.get("trials", 100))
            norm["seed"] = int(run["seed"])
            if norm["trials"] <= 0:
                raise ConfigError(f"{where}.trials: must be positive")
        out.append(norm)
    return out


def load_config(path: str) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    return validate_config(doc)


def _run_to_config(run: dict) -> dict:
    q = run["quad"]
    d = {"kind": run["kind"], "entry": run["entry"], "form": run["form"],
         "params": run["params"].to_dict(),
         "quad": {"abs_tol": q.abs_tol, "rel_tol": q.rel_tol, "max_evals": q.max_evals,
                  "tail_split": q.tail_split}}
    if run["kind"] == "verify":
        d["slots"] = {s: render(e) for s, e in run["slots"].items()}
    else:
        d.update(families=dict(run["families"]), trials=run["trials"], seed=run["seed"])
    if run.get("outputs"):
        d["outputs"] = dict(run["outputs"])
    return d


def dump_config(runs: list[dict], path: str):
    doc = {"schema_version": 1, "runs": [_run_to_config(r) for r in runs]}
    try:
        Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from None


# --------------------------------------------------------------------------
# running

def _falsify_outcome(res: verifier.FalsifyResult) -> str:
    counts = res.counts
    if counts.get(verifier.Outcome.FAILS):
        return verifier.Outcome.FAILS
    if set(counts) == {verifier.Outcome.HOLDS}:
        return verifier.Outcome.HOLDS
    return verifier.Outcome.INCONCLUSIVE


def execute(runs: list[dict], workers: int = 1) -> dict:
    """Run normalized config runs; returns a suite report dict."""
    verify_specs = [verifier.TaskSpec(r["entry"], r["params"], r["slots"], r["quad"], r["form"])
                    for r in runs if r["kind"] == "verify"]
    suite = verifier.batch_verify(verify_specs, workers=workers)
    records = iter(suite.records)
    out_runs = []
    for r in runs:
        cfg = _run_to_config(r)
        if r["kind"] == "verify":
            rec = next(records)
            d = rec.to_dict()
            d.pop("index", None)
            out_runs.append({"kind": "verify", "config": cfg, "outcome": rec.outcome,
                             "result": d})
        else:
            try:
                res = verifier.falsify(r["entry"], r["families"], r["trials"], r["seed"],
                                       r["quad"], r["form"])
                result, outcome = res.to_dict(), _falsify_outcome(res)
            except verifier.FalsifyError as exc:
                result, outcome = {"entry": r["entry"], "error": str(exc)}, "inconclusive-empty"
            out_runs.append({"kind": "falsify", "config": cfg, "outcome": outcome,
                             "result": result})
    outcomes = [r["outcome"] for r in out_runs]
    if not outcomes:
        status = "inconclusive-empty"
    elif verifier.Outcome.FAILS in outcomes:
        status = verifier.Outcome.FAILS
    elif all(o == verifier.Outcome.HOLDS for o in outcomes):
        status = verifier.Outcome.HOLDS
    else:
        status = verifier.Outcome.INCONCLUSIVE
    counts: dict[str, int] = {}
    for o in outcomes:
        counts[o] = counts.get(o, 0) + 1
    return {"kind": "suite", "status": status, "counts": dict(sorted(counts.items())),
            "runs": out_runs}


def status_code(status: str) -> int:
    return {verifier.Outcome.HOLDS: EXIT_HOLDS,
            verifier.Outcome.FAILS: EXIT_FAILS}.get(status, EXIT_INCONCLUSIVE)


def _write_outputs(report: dict, runs: list[dict]):
    for r, rr in zip(runs, report["runs"]):
        for fmt, path in r.get("outputs", {}).items():
            single = dict(report, runs=[rr], status=rr["outcome"],
                          counts={rr["outcome"]: 1})
            emit_report(single, fmt, path)


def _emit(report: dict, out: str | None, fmt: str | None = None):
    if out:
        fmt = fmt or Path(out).suffix.lstrip(".").lower() or "json"
        emit_report(report, fmt, out)


def _fmt(v: float) -> str:
    return f"{v:.10g}" if isinstance(v, float) and math.isfinite(v) else str(v)


def _print_suite(report: dict):
    for i, run in enumerate(report["runs"]):
        res = run["result"]
        if run["kind"] == "verify" and "lhs" in res:
            print(f"[{i}] {res['entry']}: lhs={_fmt(res['lhs'])} (+-{_fmt(res['lhs_err'])}) "
                  f"rhs={_fmt(res['rhs'])} (C={_fmt(res['constant'])}) "
                  f"ratio={_fmt(res['ratio'])} {run['outcome'].upper()}")
            if res.get("diagnostic"):
                print(f"    {res['diagnostic']}")
        elif run["kind"] == "verify":
            print(f"[{i}] {res['entry']}: {run['outcome'].upper()}: {res['error']}")
        else:
            worst = res.get("worst") or {}
            print(f"[{i}] falsify {res['entry']}: counts={res.get('counts', {})} "
                  f"worst ratio={_fmt(res.get('worst_ratio', math.nan))} "
                  f"{run['outcome'].upper()}")
            if worst:
                print(f"    witness params={worst['params']} bindings={worst['bindings']}")
    print(f"status: {report['status']} {report['counts']}")


def _quad_from_args(args) -> dict:
    q = default_quad()
    for key in ("abs_tol", "rel_tol", "max_evals"):
        v = getattr(args, key, None)
        if v is not None:
            q[key] = v
    return q


def _params_from_args(args) -> dict:
    d = {k: getattr(args, k) for k in ("p", "q", "a") if getattr(args, k, None) is not None}
    if getattr(args, "interval", None):
        d["interval"] = list(args.interval)
    return d


def _cmd_list(args) -> int:
    rows = catalog.list_catalog()
    for e in rows:
        flags = f"  [{'; '.join(e['flags'])}]" if e["flags"] else ""
        print(f"{e['id']:<16} {e['direction']}  slots={','.join(e['slots']):<12} "
              f"constraints: {', '.join(e['constraints'])}{flags}")
    _emit({"kind": "catalog", "entries": rows}, args.out)
    return EXIT_HOLDS


def _single_run(args, kind: str) -> list[dict]:
    run = {"kind": kind, "entry": args.ineq, "form": args.form,
           "params": _params_from_args(args), "quad": _quad_from_args(args)}
    if kind == "verify":
        run["slots"] = {s: getattr(args, s) for s in SLOTS if getattr(args, s) is not None}
    else:
        fams = {}
        for item in args.family or []:
            slot, sep, fam = item.partition("=")
            if not sep:
                raise UsageError(f"--family expects slot=family, got {item!r}")
            fams[slot] = fam
        run.update(families=fams, trials=args.trials, seed=args.seed)
    return validate_config({"runs": [run]})


def _cmd_runs(args, runs, single: bool = False) -> int:
    if getattr(args, "dump_config", None):
        dump_config(runs, args.dump_config)
    report = execute(runs, workers=getattr(args, "workers", 1) or 1)
    if single and report["status"] != verifier.Outcome.FAILS:
        # a lone verify reports bad input (constraint, slot, hypothesis) as a usage error
        bad = [r for r in report["runs"] if r["outcome"] == verifier.Outcome.CONSTRUCTION_ERROR]
        if bad:
            raise UsageError(bad[0]["result"]["error"])
    _write_outputs(report, runs)
    _emit(report, args.out)
    _print_suite(report)
    return status_code(report["status"])


def _cmd_verify(args) -> int:
    return _cmd_runs(args, _single_run(args, "verify"), single=True)


def _cmd_falsify(args) -> int:
    return _cmd_runs(args, _single_run(args, "falsify"))


def _cmd_suite(args) -> int:
    return _cmd_runs(args, load_config(args.config))


def _cmd_sharpness(args) -> int:
    if not (args.tmax > args.tmin > 1):
        raise UsageError("sharpness needs tmax > tmin > 1")
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    grid = np.geomspace(args.tmin, args.tmax, args.points) if args.points > 1 else [args.tmax]
    res = explorer.sharpness_sweep(args.p, [float(t) for t in grid],
                                   QuadOptions(**_quad_from_args(args)))
    report = dict(res.to_dict(), kind="sweep")
    _emit(report, args.out)
    if args.plot:
        emit_report(report, "svg", args.plot)
    sharp = (args.p / (args.p - 1.0)) ** args.p
    for t, r in res.rows():
        print(f"T={t:<12.6g} ratio={r:.10f}  lhs/int(f^p)={r * sharp:.6f}")
    print(f"fit: ratio ~ 1 - {res.c_unit:.6f}/ln T  (free asymptote: "
          f"{res.asymptote:.6f} - {res.c:.6f}/ln T)")
    if res.oracle_ratio is not None:
        print(f"max relative deviation from closed form: {res.max_oracle_rel_err:.3e}")
    return EXIT_HOLDS


def _cmd_optimize(args) -> int:
    fam = explorer.FAMILIES[args.family]
    if args.bounds:
        bounds = dict(zip(fam.names, fam.bounds))
        for item in args.bounds:
            name, sep, rng = item.partition("=")
            if not sep or name not in bounds:
                raise UsageError(f"--bounds expects NAME=LO,HI with NAME in {fam.names}, "
                                 f"got {item!r}")
            try:
                lo, hi = (float(v) for v in rng.split(","))
            except ValueError:
                raise UsageError(f"--bounds {name}: expected LO,HI, got {rng!r}") from None
            bounds[name] = (lo, hi)
        try:
            fam = fam.with_bounds([bounds[n] for n in fam.names])
        except ValueError as exc:
            raise UsageError(f"--bounds: {exc}") from None
    params = validate_config({"runs": [{"kind": "verify", "entry": args.ineq,
                                        "params": _params_from_args(args)}]})[0]["params"]
    trace = explorer.maximize_ratio(
        args.ineq, params, fam,
        explorer.OptimizerOptions(starts=args.starts, max_evals=args.max_fev),
        seed=args.seed, quad=QuadOptions(**_quad_from_args(args)))
    report = dict(trace.to_dict(), kind="trace", params=params.to_dict(), seed=args.seed)
    _emit(report, args.out)
    if args.plot:
        emit_report(report, "svg", args.plot)
    print(f"best ratio {trace.best_ratio:.10f} at "
          f"{dict(zip(trace.names, trace.best_params))} after {trace.evaluations} evaluations")
    for d in trace.diagnostics:
        print(f"WARNING: {d}", file=sys.stderr)
    return EXIT_HOLDS


LEMMA_FAMILIES = {
    "lemma-G": ("positive-ratio-nonincreasing", "positive-nonincreasing"),
    "lemma-phi": ("convex-submultiplicative-zero-at-zero",),
}


def run_lemmas(samples: int, seed: int, grid: int = 512) -> dict:
    """Check both ratio lemmas on ``samples`` sampled inputs each."""
    results = []
    for which, fams in LEMMA_FAMILIES.items():
        for i in range(samples):
            fam = fams[i % len(fams)]
            spec = sample_admissible(fam, [seed, i, len(results)])
            try:
                cert = verify_ratio_lemma(which, spec, grid)
                row = {"status": cert.status.value, "witness": cert.witness,
                       "property": cert.property}
            except PremiseError as exc:
                row = {"status": "premises-not-satisfied", "witness": None,
                       "property": str(exc)}
            results.append(dict(row, which=which, family=fam, input=spec.text))
    counts: dict[str, int] = {}
    for r in results:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    return {"kind": "lemmas", "seed": seed, "grid": grid, "samples": samples,
            "counts": dict(sorted(counts.items())), "results": results}


def _cmd_lemmas(args) -> int:
    report = run_lemmas(args.samples, args.seed, args.grid)
    _emit(report, args.out)
    for r in report["results"]:
        if r["status"] != CertStatus.VERIFIED.value:
            print(f"{r['which']}: {r['status']} on {r['input']} witness={r['witness']}")
    print(f"lemmas: {report['counts']}")
    counts = report["counts"]
    if counts.get(CertStatus.REFUTED.value):
        return EXIT_FAILS
    if set(counts) == {CertStatus.VERIFIED.value}:
        return EXIT_HOLDS
    return EXIT_INCONCLUSIVE


# --------------------------------------------------------------------------
# argument parsing

def _add_quad(p):
    g = p.add_argument_group("quadrature (defaults from $HARDYCHECK_ABS_TOL / $HARDYCHECK_REL_TOL)")
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--max-evals", dest="max_evals", type=int)


def _add_params(p):
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--a", type=float, help="exponent parameter (not an interval end)")
    p.add_argument("--interval", nargs=2, metavar=("LO", "HI"),
                   help="domain endpoints for window entries; HI may be inf")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hardycheck", description="Numerical checks of Hardy-type inequalities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("list", help="list catalog entries")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("verify", help="verify one inequality instance")
    p.add_argument("--ineq", required=True)
    p.add_argument("--form", choices=("proof", "statement"), default="proof")
    _add_params(p)
    for s in SLOTS:
        p.add_argument(f"--{s}", help=f"expression bound to slot {s}")
    _add_quad(p)
    p.add_argument("--out", help="report path (.json or .csv)")
    p.add_argument("--dump-config", dest="dump_config")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("suite", help="run a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-config", dest="dump_config")
    p.set_defaults(func=_cmd_suite)

    p = sub.add_parser("falsify", help="random search for the worst ratio")
    p.add_argument("--ineq", required=True)
    p.add_argument("--form", choices=("proof", "statement"), default="proof")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--family", action="append", metavar="SLOT=FAMILY")
    _add_params(p)
    _add_quad(p)
    p.add_argument("--out")
    p.add_argument("--dump-config", dest="dump_config")
    p.set_defaults(func=_cmd_falsify)

    p = sub.add_parser("sharpness", help="sweep the truncated extremal family")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--tmin", type=float, default=10.0)
    p.add_argument("--tmax", type=float, default=1e6)
    p.add_argument("--points", type=int, default=6)
    _add_quad(p)
    p.add_argument("--out", help="table path (.csv) or report (.json)")
    p.add_argument("--plot", help="svg plot path")
    p.set_defaults(func=_cmd_sharpness)

    p = sub.add_parser("optimize", help="maximize the ratio over a function family")
    p.add_argument("--ineq", required=True)
    p.add_argument("--family", choices=sorted(explorer.FAMILIES), required=True)
    p.add_argument("--bounds", action="append", metavar="NAME=LO,HI",
                   help="override the box for one family parameter (repeatable)")
    p.add_argument("--starts", type=int, default=4)
    p.add_argument("--max-fev", dest="max_fev", type=int, default=150)
    p.add_argument("--seed", type=int, required=True)
    _add_params(p)
    _add_quad(p)
    p.add_argument("--out")
    p.add_argument("--plot")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("lemmas", help="check the ratio lemmas on sampled inputs")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lemmas)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError, CatalogError, ParseError, ReportError,
            CumulativeDivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except verifier.FalsifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
