"""Report serialization: schema-stable JSON, CSV tables and SVG line charts.

JSON is written with sorted keys and no timestamps, so seeded runs are
byte-identical.  Non-finite floats become the strings ``"inf"``, ``"-inf"``
and ``"nan"`` to keep the output strict JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

__all__ = ["SCHEMA_VERSION", "ReportError", "emit_report", "to_jsonable", "dumps"]

SCHEMA_VERSION = 1


class ReportError(OSError):
    pass


def to_jsonable(obj: Any) -> Any:
    """Recursively convert to plain JSON types."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps(report: dict) -> str:
    body = dict(to_jsonable(report), schema_version=SCHEMA_VERSION)
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_rows(report: dict) -> tuple[list[str], list[list]]:
    kind = report.get("kind")
    if kind == "sweep":
        return ["T", "ratio"], [list(r) for r in zip(report["T"], report["ratio"])]
    if kind == "trace":
        names = list(report["names"])
        return (["evaluation", *names, "ratio"],
                [[i, *it["params"], it["ratio"]] for i, it in enumerate(report["iterates"])])
    if kind == "suite":
        cols = ["run", "kind", "entry", "outcome", "lhs", "lhs_err", "rhs", "constant",
                "ratio"]
        rows = []
        for i, run in enumerate(report["runs"]):
            res = run["result"]
            if run["kind"] == "falsify":
                worst = res.get("worst") or {}
                row = {"entry": res["entry"], "outcome": run["outcome"], **{
                    k: worst.get(k, "") for k in ("lhs", "lhs_err", "rhs", "constant", "ratio")}}
            else:
                row = res
            rows.append([i, run["kind"]] + [row.get(c, "") for c in cols[2:]])
        return cols, rows
    if kind == "lemmas":
        cols = ["which", "input", "status", "witness"]
        return cols, [[r.get(c, "") for c in cols] for r in report["results"]]
    raise ReportError(f"csv output is not defined for report kind {kind!r}")


def _svg(report: dict, path: Path):
    import matplotlib
    from matplotlib.figure import Figure

    kind = report.get("kind")
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    if kind == "sweep":
        ax.semilogx(report["T"], report["ratio"], "o-", label="quadrature")
        if "oracle_ratio" in report:
            ax.semilogx(report["T"], report["oracle_ratio"], "k--", lw=1, label="closed form")
        ax.axhline(1.0, color="grey", lw=0.8)
        ax.set_xlabel("T")
        ax.set_ylabel("ratio")
        ax.set_title(f"truncated extremal family, p = {report['p']}")
        ax.legend()
    elif kind == "trace":
        r = np.array([it["ratio"] for it in report["iterates"]], dtype=float)
        finite = np.where(np.isfinite(r), r, np.nan)
        ax.plot(finite, ".", ms=3, label="candidates")
        ax.plot(np.fmax.accumulate(np.nan_to_num(finite, nan=-np.inf)), label="best so far")
        ax.set_xlabel("evaluation")
        ax.set_ylabel("ratio")
        ax.set_title(f"{report['entry']} / {report['family']}")
        ax.legend()
    else:
        raise ReportError(f"svg plots are defined for sweeps and traces, not {kind!r}")
    with matplotlib.rc_context({"svg.hashsalt": "hardycheck", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def emit_report(report: dict, fmt: str, path: str | Path) -> None:
    """Write ``report`` (a dict with a ``kind`` key) as json, csv or svg."""
    path = Path(path)
    report = to_jsonable(report)
    try:
        if fmt == "json":
            path.write_text(dumps(report))
        elif fmt == "csv":
            header, rows = _csv_rows(report)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            path.write_text(buf.getvalue())
        elif fmt == "svg":
            _svg(report, path)
        else:
            raise ReportError(f"unknown report format {fmt!r}")
    except OSError as exc:
        if isinstance(exc, ReportError):
            raise
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc
