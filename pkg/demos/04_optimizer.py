# Multistart Nelder-Mead over a parameterized family, starting from Halton points.
# Run: python3 demos/04_optimizer.py [out.svg]
import sys

from hardycheck.catalog import Params
from hardycheck.explorer import maximize_ratio
from hardycheck.quadrature import Interval
from hardycheck.report import emit_report

tr = maximize_ratio("hardy", Params(p=2), "trunc-power", seed=0)
print("best (alpha, T):", tr.best_params, "ratio", round(tr.best_ratio, 6),
      "after", tr.evaluations, "evaluations")

tr15 = maximize_ratio("hardy", Params(p=1.5), "trunc-power", seed=0)
print("p=1.5 best:", tr15.best_params, round(tr15.best_ratio, 6))

# homogeneity: constants on a window all give the same ratio
flat = maximize_ratio("hardy-finite", Params(p=2, interval=Interval(1, 2)), "constant", seed=0)
print("hardy-finite constant family: ratios span",
      min(r for _, r in flat.iterates), max(r for _, r in flat.iterates))

if len(sys.argv) > 1:
    emit_report(dict(tr.to_dict(), kind="trace"), "svg", sys.argv[1])
    print("trace plot written to", sys.argv[1])
